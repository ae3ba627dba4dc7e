"""Fish image recognition toolkit.

Pipeline: decode -> median filter -> background unification -> rotation
normalization -> mask/contour/color groups -> 47-value descriptor -> score
network -> decision tree -> (cluster, poison, family) label. A deterministic
synthetic corpus generator makes the whole loop testable end to end.
"""

from . import dtree, features, imageio, mlp, pipeline, preprocess, segment, synthgen
from .errors import ToolkitError
from .pipeline import (
    EvalReport,
    PipelineConfig,
    TrainedBundle,
    evaluate,
    load_bundle,
    run_pipeline,
    save_bundle,
    train_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "EvalReport",
    "PipelineConfig",
    "ToolkitError",
    "TrainedBundle",
    "dtree",
    "evaluate",
    "features",
    "imageio",
    "load_bundle",
    "mlp",
    "pipeline",
    "preprocess",
    "run_pipeline",
    "save_bundle",
    "segment",
    "synthgen",
    "train_bundle",
]
