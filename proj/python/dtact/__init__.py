"""Tactile sensing toolkit: simulate presses, calibrate, reconstruct depth and track poses."""

from ._dtact import *  # noqa: F401,F403
from ._dtact import (
    CROP_SIZE,
    PIXEL_PITCH,
    DtactError,
    MappingList,
    Pipeline,
    RegressionModel,
)

__all__ = [name for name in dir() if not name.startswith("_")]
