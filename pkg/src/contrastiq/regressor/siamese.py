"""Pairwise difference regression and anchor-based scoring.

The head sees |f_a - f_b| and regresses the normalized score distance
|z_a - z_b|, which makes it exactly symmetric in its two inputs.  A
difference-only model carries no absolute scale, so single-image scoring uses
a fixed convention: predicted distances to a set of labeled anchors weight
the anchor scores by 1 / (distance + eps), and the weighted mean is clipped
to the reporting range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import TRAIN, VAL, Manifest, ZScoreNormalizer, normalize
from ..errors import DimMismatch, EmptySplit, NoAnchors
from ..features.cache import FeatureCache
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
from .training import TrainConfig

SCORE_EPS = 1e-6


@dataclass
class PairSample:
    feature_a: np.ndarray
    feature_b: np.ndarray
    target: float  # normalized |mos_a - mos_b|

    def __post_init__(self):
        if self.feature_a.shape != self.feature_b.shape:
            raise DimMismatch("pair features must share a dimension")
        if self.target < 0:
            raise ValueError("pair target must be >= 0")


def make_pairs(
    cache: FeatureCache,
    manifest: Manifest,
    normalizer: ZScoreNormalizer,
    split: str = TRAIN,
    pairs_per_image: int = 4,
    seed: int = 0,
) -> list[PairSample]:
    """K seeded partners per image from the given split (self-pairs excluded)."""
    records = manifest.subset(split)
    if len(records) < 2:
        raise EmptySplit(f"need >= 2 records in split {split!r} to form pairs")
    feats = cache.rows_for([r.image_path for r in records])
    z = [normalize(normalizer, r.mos) for r in records]
    rng = SeededRng(seed).derive("pairs", split)
    pairs = []
    for i in range(len(records)):
        for _ in range(pairs_per_image):
            j = rng.randbelow(len(records) - 1)
            if j >= i:
                j += 1
            pairs.append(PairSample(feats[i], feats[j], abs(z[i] - z[j])))
    return pairs


def _pair_arrays(pairs: list[PairSample]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([np.abs(p.feature_a - p.feature_b) for p in pairs]).astype(np.float32)
    y = np.array([p.target for p in pairs], dtype=np.float32)
    return x, y


def siamese_train(
    pairs: list[PairSample],
    cfg: TrainConfig,
    val_pairs: list[PairSample] | None = None,
) -> HeadParams:
    """Train the head on |f_a - f_b| -> |z_a - z_b| with the standard loop.

    The plateau scheduler and best-checkpoint selection monitor the
    validation-pair MSE when ``val_pairs`` is given, else the train MSE.
    """
    if not pairs:
        raise EmptySplit("no training pairs")
    x_train, y_train = _pair_arrays(pairs)
    x_val, y_val = _pair_arrays(val_pairs) if val_pairs else (None, None)

    # same optimizer conditioning as the plain loop; folded out at the end
    shift, scale = fit_input_standardizer(x_train)
    x_train = ((x_train - shift) / scale).astype(np.float32)
    if x_val is not None:
        x_val = ((x_val - shift) / scale).astype(np.float32)

    params = init_head(x_train.shape[1], SeededRng(cfg.seed).derive("head-init"))
    opt = OptimizerState.for_params(params, lr=cfg.learning_rate)
    sched = PlateauScheduler(
        lr=cfg.learning_rate, factor=cfg.scheduler_factor,
        patience=cfg.scheduler_patience, min_lr=cfg.scheduler_min_lr,
    )
    n = x_train.shape[0]
    best_metric = float("inf")
    best_params = params.copy()
    for epoch in range(1, cfg.epochs + 1):
        order = list(range(n))
        SeededRng(cfg.seed ^ epoch).shuffle(order)
        drop_rng = SeededRng(cfg.seed).derive("dropout", epoch)
        sq_sum = 0.0
        for start in range(0, n, cfg.batch_size):
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
        if x_val is not None:
            pv, _ = head_forward(x_val, params, mode="eval")
            metric, _ = mse_loss(pv, y_val)
        else:
            metric = sq_sum / n
        if metric < best_metric:
            best_metric = metric
            best_params = params.copy()
        opt.lr = sched.step(metric)
    return fold_input_standardizer(best_params, shift, scale)


def siamese_distance(
    feature_a: np.ndarray, feature_b: np.ndarray, params: HeadParams
) -> float:
    """Predicted normalized score distance; exactly symmetric in (a, b)."""
    x = np.abs(np.asarray(feature_a, dtype=np.float32) - np.asarray(feature_b, dtype=np.float32))
    pred, _ = head_forward(x, params, mode="eval")
    return float(pred)


def siamese_score(
    feature: np.ndarray,
    anchors: list[tuple[np.ndarray, float]],
    params: HeadParams,
    normalizer: ZScoreNormalizer,
) -> float:
    """Inverse-distance-weighted mean of anchor scores, clipped to range."""
    if not anchors:
        raise NoAnchors("need at least one (feature, mos) anchor")
    weights = []
    scores = []
    for anchor_feature, anchor_mos in anchors:
        d = max(0.0, siamese_distance(feature, anchor_feature, params))
        weights.append(1.0 / (d + SCORE_EPS))
        scores.append(anchor_mos)
    score = float(np.dot(weights, scores) / np.sum(weights))
    return min(normalizer.clip_hi, max(normalizer.clip_lo, score))
