"""Question-aware keyframe selection with Gaussian temporal masks and
question-conditioned coverage regularization."""

from kfsel.core import (
    GaussianParams,
    KeyframeSelection,
    gaussian_mask,
    normalize_sum,
    top_n,
)
from kfsel.qtype import QuestionType, classify

__all__ = [
    "GaussianParams",
    "KeyframeSelection",
    "QuestionType",
    "classify",
    "gaussian_mask",
    "normalize_sum",
    "top_n",
]

__version__ = "0.1.0"
