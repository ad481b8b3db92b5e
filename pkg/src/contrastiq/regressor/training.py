"""The training loop: shuffled mini-batches, AdamW, plateau scheduling,
best-checkpoint selection on validation MSE.

Determinism contract: every reported number is a pure function of the feature
cache and the config.  Per-epoch shuffles are seeded with ``seed XOR epoch``
(epochs are 1-based) and dropout masks come from a stream derived per epoch,
so batch composition and masks never depend on wall clock, hashing, or thread
scheduling.  Train MSE is averaged over samples in normalized-score space;
validation MSE/PLCC/SRCC are computed on denormalized, clipped predictions
against raw MOS, which makes the saved report directly comparable with the
standalone evaluation command.

Feature dimensions can differ in scale by orders of magnitude (grayscale
means vs divergences), which cripples a fixed-step optimizer.  The loop
therefore trains in per-dimension standardized space (train-split statistics)
and folds the affine back into the layer-1 weights of every checkpoint, so
persisted heads always consume raw cache features.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import TRAIN, VAL, Manifest, ZScoreNormalizer, denormalize_clip, normalize
from ..errors import DegenerateVector, EmptySplit, FeatureError, LengthMismatch
from ..features.cache import FeatureCache
from ..metrics import plcc as plcc_fn
from ..metrics import srcc as srcc_fn
from ..rng import SeededRng
from .head import (
    HeadParams,
    fit_input_standardizer,
    fold_input_standardizer,
    head_backward,
    head_forward,
    init_head,
    mse_loss,
)
from .optim import OptimizerState, PlateauScheduler, adamw_step


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 1e-5
    epochs: int = 50
    batch_size: int = 32
    dropout: float = 0.5
    seed: int = 0
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    scheduler_min_lr: float = 1e-6
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be > 0 and weight_decay >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 < self.scheduler_factor < 1.0:
            raise ValueError("scheduler_factor must be in (0, 1)")
        if self.scheduler_patience < 1 or self.scheduler_min_lr <= 0:
            raise ValueError("bad scheduler settings")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0 and self.adam_eps > 0):
            raise ValueError("bad AdamW settings")


@dataclass
class EpochStats:
    epoch: int
    train_mse: float
    val_mse: float
    val_plcc: float
    val_srcc: float
    lr: float


@dataclass
class TrainReport:
    epochs: list[EpochStats]
    best_epoch: int
    wall_time_s: float

    @property
    def best(self) -> EpochStats:
        return self.epochs[self.best_epoch - 1]


def _safe_corr(fn, pred, actual) -> float:
    # early epochs can clip every prediction to the same bound, and a val
    # split can hold a single record; an undefined correlation is recorded
    # as 0 rather than aborting the run
    try:
        return fn(pred, actual)
    except (DegenerateVector, LengthMismatch):
        return 0.0


def train(
    cache: FeatureCache,
    manifest: Manifest,
    normalizer: ZScoreNormalizer,
    cfg: TrainConfig,
) -> tuple[HeadParams, TrainReport]:
    started = time.perf_counter()
    train_records = manifest.subset(TRAIN)
    val_records = manifest.subset(VAL)
    if not train_records:
        raise EmptySplit("no records labeled train")
    if not val_records:
        raise EmptySplit("no records labeled val")
    cache_paths = set(cache.paths)
    missing = [r.image_path for r in manifest.records if r.image_path not in cache_paths]
    if missing:
        raise FeatureError(f"cache does not cover manifest: {missing[:3]}")

    x_train = cache.rows_for([r.image_path for r in train_records])
    y_train = np.array([normalize(normalizer, r.mos) for r in train_records], dtype=np.float32)
    x_val = cache.rows_for([r.image_path for r in val_records])
    mos_val = np.array([r.mos for r in val_records], dtype=np.float64)

    # condition the optimizer: train in standardized feature space, fold the
    # affine back into layer 1 for every checkpoint so heads consume raw
    # features and in-loop validation matches the saved artifact bit for bit
    shift, scale = fit_input_standardizer(x_train)
    x_train = ((x_train - shift) / scale).astype(np.float32)

    params = init_head(cache.dim, SeededRng(cfg.seed).derive("head-init"))
    opt = OptimizerState.for_params(params, lr=cfg.learning_rate)
    sched = PlateauScheduler(
        lr=cfg.learning_rate,
        factor=cfg.scheduler_factor,
        patience=cfg.scheduler_patience,
        min_lr=cfg.scheduler_min_lr,
    )

    n_train = len(train_records)
    stats: list[EpochStats] = []
    best_val = float("inf")
    best_epoch = 0
    best_params = params.copy()

    for epoch in range(1, cfg.epochs + 1):
        order = list(range(n_train))
        SeededRng(cfg.seed ^ epoch).shuffle(order)
        drop_rng = SeededRng(cfg.seed).derive("dropout", epoch)
        lr_used = opt.lr
        sq_sum = 0.0
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            preds, trace = head_forward(
                x_train[idx], params, mode="train", rng=drop_rng, dropout=cfg.dropout
            )
            loss, dpred = mse_loss(preds, y_train[idx])
            grads = head_backward(trace, dpred, params)
            adamw_step(
                params, grads, opt,
                beta1=cfg.adam_beta1, beta2=cfg.adam_beta2,
                eps=cfg.adam_eps, weight_decay=cfg.weight_decay,
            )
            sq_sum += loss * len(idx)
        train_mse = sq_sum / n_train

        eval_params = fold_input_standardizer(params, shift, scale)
        z_val, _ = head_forward(x_val, eval_params, mode="eval")
        pred_val = np.array([denormalize_clip(normalizer, float(z)) for z in np.atleast_1d(z_val)])
        diff = pred_val - mos_val
        val_mse = float(np.mean(diff * diff))
        val_plcc = _safe_corr(plcc_fn, pred_val, mos_val)
        val_srcc = _safe_corr(srcc_fn, pred_val, mos_val)
        stats.append(EpochStats(epoch, train_mse, val_mse, val_plcc, val_srcc, lr_used))

        if val_mse < best_val:
            best_val = val_mse
            best_epoch = epoch
            best_params = eval_params
        opt.lr = sched.step(val_mse)

    report = TrainReport(epochs=stats, best_epoch=best_epoch,
                         wall_time_s=time.perf_counter() - started)
    return best_params, report


def predict_scores(features: np.ndarray, params: HeadParams, normalizer: ZScoreNormalizer) -> np.ndarray:
    """Eval-mode predictions, denormalized and clipped; order preserved."""
    z, _ = head_forward(np.atleast_2d(features), params, mode="eval")
    return np.array([denormalize_clip(normalizer, float(v)) for v in np.atleast_1d(z)])


REPORT_HEADER = "epoch,train_mse,val_mse,val_plcc,val_srcc,lr"


def save_train_report(report: TrainReport, path) -> None:
    lines = [REPORT_HEADER]
    for e in report.epochs:
        lines.append(f"{e.epoch},{e.train_mse!r},{e.val_mse!r},{e.val_plcc!r},{e.val_srcc!r},{e.lr!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_train_report(path) -> list[EpochStats]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != REPORT_HEADER:
        raise ValueError(f"not a train report: {path}")
    out = []
    for ln in lines[1:]:
        e, tm, vm, vp, vs, lr = ln.split(",")
        out.append(EpochStats(int(e), float(tm), float(vm), float(vp), float(vs), float(lr)))
    return out
