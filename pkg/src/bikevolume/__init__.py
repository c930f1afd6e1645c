"""Estimate daily bicycle volumes on every street from counters, crowdsourced and open data."""

__version__ = "0.1.0"

from .errors import BikeVolumeError, ConfigError, DataError  # noqa: E402
from .model import ModelSpec, VolumeModel  # noqa: E402

__all__ = ["BikeVolumeError", "ConfigError", "DataError", "ModelSpec", "VolumeModel", "__version__"]
