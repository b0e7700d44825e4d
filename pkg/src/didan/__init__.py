"""Machine-generated news detection via visual-semantic consistency."""

from .adam import AdamState, adam_step
from .data import (
    ArticleRecord,
    ImageCaptionPair,
    Label,
    Manifest,
    load_manifest,
    read_feature_blob,
    write_feature_blob,
)
from .entities import compute_indicator, normalize_entity
from .gradcheck import finite_difference_check
from .kernels import BACKEND as KERNEL_BACKEND
from .model import DidanParams, ForwardTrace, forward_article
from .synth import SynthConfig, bayes_oracle_accuracy, generate_synthetic_dataset
from .trainer import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "adam_step",
    "ArticleRecord",
    "ImageCaptionPair",
    "Label",
    "Manifest",
    "load_manifest",
    "read_feature_blob",
    "write_feature_blob",
    "compute_indicator",
    "normalize_entity",
    "finite_difference_check",
    "KERNEL_BACKEND",
    "DidanParams",
    "ForwardTrace",
    "forward_article",
    "SynthConfig",
    "bayes_oracle_accuracy",
    "generate_synthetic_dataset",
    "TrainConfig",
    "train",
    "__version__",
]
