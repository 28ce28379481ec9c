"""Reconstruction-regularized hourglass glance classifier.

Library + CLI for training a two-channel encoder-decoder glance ROI
classifier under standard, personalized, and weakly supervised
multi-domain regimes, on a built-in synthetic multi-domain dataset,
with from-scratch reverse-mode differentiation.
"""

from .tensor import Tensor
from .model import ArchitectureScale, GlanceModel, ModelFlags, FULL_SCALE, DESK_SCALE

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "ArchitectureScale",
    "GlanceModel",
    "ModelFlags",
    "FULL_SCALE",
    "DESK_SCALE",
    "__version__",
]
