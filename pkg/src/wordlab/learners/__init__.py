"""Learner families behind one fit/predict contract."""
from .core import (
    DEFAULT_PARAMS,
    FAMILIES,
    LearnerSpec,
    TrainedModel,
    fit,
    ovr_wrap,
    threshold,
)

__all__ = [
    "DEFAULT_PARAMS",
    "FAMILIES",
    "LearnerSpec",
    "TrainedModel",
    "fit",
    "ovr_wrap",
    "threshold",
]
