"""Conditioned diffusion video anomaly detection (C++ core)."""

from ._core import (
    ConfigError,
    DataError,
    InvalidInput,
    Model,
    NumericError,
    VadError,
    batch_threshold,
    classify,
    config_fingerprint,
    dynamic_image,
    evaluate,
    generate_synthetic,
    karras_schedule,
    load_config,
    normalize_image,
    precondition,
    read_features,
    roc_auc,
    sample_training_sigmas,
    score,
    star_image,
    toy_condition_stats,
    train,
    write_identity_checkpoint,
)

__all__ = [name for name in dir() if not name.startswith("_")]
