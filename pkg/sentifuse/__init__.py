"""
SentiFuse - Multimodal emotion classification from transcripts, audio and motion capture.

Features per modality (TF-IDF with LASSO and RFE selection, spectral audio
descriptors with boosted-tree leaf embeddings, motion features stacked with
boosted-tree probabilities) feed a late-fusion network trained from scratch
on numpy.
"""

__version__ = "0.1.0"

# Package metadata
__title__ = "sentifuse"
__description__ = "Multimodal late-fusion emotion classification pipeline"
__license__ = "MIT"

# Version info tuple for programmatic access
VERSION_INFO = tuple(map(int, __version__.split(".")))

from sentifuse.cli.main import cli_main  # noqa: E402
from sentifuse.core.models import FeatureMatrix, LabeledDataset  # noqa: E402

__all__ = [
    "__version__",
    "FeatureMatrix",
    "LabeledDataset",
    "cli_main",
]
