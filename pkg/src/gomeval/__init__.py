"""Open-set re-identification metrics over query-by-gallery distance matrices."""

from .model import (
    Dataset,
    DistanceMatrix,
    EvalConfig,
    EvalReport,
    GalleryMeta,
    QueryMeta,
    ThresholdCurve,
    validate_dataset,
)
from .pipeline import evaluate, run

__all__ = [
    "Dataset",
    "DistanceMatrix",
    "EvalConfig",
    "EvalReport",
    "GalleryMeta",
    "QueryMeta",
    "ThresholdCurve",
    "evaluate",
    "run",
    "validate_dataset",
]

__version__ = "0.1.0"
