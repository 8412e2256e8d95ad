"""
Core Layer - Shared types, configuration and numeric table operations.

This package holds the value types every pipeline stage exchanges, the
exception hierarchy, the run configuration schema and manager, the
seeded random streams and the table I/O used for all artifacts.
"""

from sentifuse.core.config_manager import ConfigManager, load_config
from sentifuse.core.config_schemas import (
    EncoderSpec,
    FrameConfig,
    GbdtConfig,
    LabelMap,
    RunConfig,
    TargetCounts,
    TrainConfig,
    describe_config_keys,
)
from sentifuse.core.exceptions import (
    ConfigurationError,
    DataError,
    ModelStateError,
    NumericError,
    SentiFuseError,
    UsageError,
    ValidationError,
)
from sentifuse.core.models import FeatureMatrix, LabeledDataset, ZScoreStats
from sentifuse.core.rng import SeededRng
from sentifuse.core.tables import (
    concat_columns,
    load_table,
    pad_columns,
    save_table,
    zscore_apply,
    zscore_fit,
    zscore_inverse,
)

__all__ = [
    # Data Models
    "FeatureMatrix",
    "LabeledDataset",
    "ZScoreStats",
    "SeededRng",
    # Table operations
    "zscore_fit",
    "zscore_apply",
    "zscore_inverse",
    "concat_columns",
    "pad_columns",
    "load_table",
    "save_table",
    # Configuration
    "ConfigManager",
    "load_config",
    "RunConfig",
    "EncoderSpec",
    "FrameConfig",
    "GbdtConfig",
    "LabelMap",
    "TargetCounts",
    "TrainConfig",
    "describe_config_keys",
    # Exceptions
    "SentiFuseError",
    "ConfigurationError",
    "UsageError",
    "DataError",
    "ValidationError",
    "ModelStateError",
    "NumericError",
]
