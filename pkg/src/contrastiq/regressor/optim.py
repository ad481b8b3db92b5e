"""AdamW with decoupled weight decay, plus the plateau learning-rate scheduler.

Moment accumulators live in float64 regardless of the parameter dtype; the
update  p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p  is computed
in float64 and cast back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimMismatch
from .head import HeadParams


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int
    lr: float

    @classmethod
    def for_params(cls, params: HeadParams, lr: float) -> "OptimizerState":
        zeros = {k: np.zeros_like(t, dtype=np.float64) for k, t in params.tensors().items()}
        return cls(m=zeros, v={k: z.copy() for k, z in zeros.items()}, t=0, lr=lr)


def adamw_step(
    params: HeadParams,
    grads: HeadParams,
    state: OptimizerState,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 1e-5,
) -> tuple[HeadParams, OptimizerState]:
    """One AdamW update; parameter and state arrays are updated in place."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    ptensors = params.tensors()
    gtensors = grads.tensors()
    for name, p in ptensors.items():
        g = gtensors[name].astype(np.float64)
        if g.shape != p.shape:
            raise DimMismatch(f"{name}: gradient shape {g.shape} vs parameter {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        update = state.lr * (m_hat / (np.sqrt(v_hat) + eps)) + state.lr * weight_decay * p.astype(np.float64)
        p -= update.astype(p.dtype)
    return params, state


@dataclass
class PlateauScheduler:
    """Halve (by ``factor``) after ``patience`` consecutive non-improving epochs.

    An epoch improves when the monitored metric drops by more than
    ``threshold`` below the best seen so far.
    """

    lr: float
    factor: float = 0.5
    patience: int = 5
    min_lr: float = 1e-6
    threshold: float = 1e-8
    best: float = field(default=float("inf"), init=False)
    bad_epochs: int = field(default=0, init=False)

    def step(self, metric: float) -> float:
        if not np.isfinite(metric):
            raise ValueError("plateau metric must be finite")
        if self.best - metric > self.threshold:
            self.best = metric
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr = max(self.lr * self.factor, self.min_lr)
                self.bad_epochs = 0
        return self.lr
