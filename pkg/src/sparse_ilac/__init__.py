"""Sparse-array integrated localization and communication toolkit."""

__version__ = "0.1.0"

from .geometry import ULA, Coprime, Nested, ArrayGeometry, build_geometry, steering_vector  # noqa: E402
from .kernels import BACKEND  # noqa: E402

__all__ = ["ULA", "Nested", "Coprime", "ArrayGeometry", "build_geometry", "steering_vector",
           "BACKEND", "__version__"]
