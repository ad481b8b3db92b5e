"""Trainable regression head, AdamW training loop, and Siamese pairwise mode."""

from .head import (
    ARCH_MLP,
    ARCH_SIAMESE,
    ForwardTrace,
    HeadParams,
    head_backward,
    head_forward,
    init_head,
    load_head,
    make_dropout_mask,
    mse_loss,
    save_head,
)
from .optim import OptimizerState, PlateauScheduler, adamw_step
from .siamese import (
    PairSample,
    make_pairs,
    siamese_distance,
    siamese_score,
    siamese_train,
)
from .training import (
    EpochStats,
    TrainConfig,
    TrainReport,
    load_train_report,
    predict_scores,
    save_train_report,
    train,
)

__all__ = [
    "ARCH_MLP",
    "ARCH_SIAMESE",
    "EpochStats",
    "ForwardTrace",
    "HeadParams",
    "OptimizerState",
    "PairSample",
    "PlateauScheduler",
    "TrainConfig",
    "TrainReport",
    "adamw_step",
    "head_backward",
    "head_forward",
    "init_head",
    "load_head",
    "load_train_report",
    "make_dropout_mask",
    "make_pairs",
    "mse_loss",
    "predict_scores",
    "save_head",
    "save_train_report",
    "siamese_distance",
    "siamese_score",
    "siamese_train",
    "train",
]
