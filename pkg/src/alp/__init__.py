"""Anisotropic Littlewood-Paley analysis and a rotating Navier-Stokes solver on the 3-torus."""

__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    Grid,
    SpectralField,
    VectorField,
    forward_transform,
    inverse_transform,
    leray_project,
)
from .norms import NormSpec  # noqa: E402

__all__ = [
    "Grid",
    "SpectralField",
    "VectorField",
    "NormSpec",
    "forward_transform",
    "inverse_transform",
    "leray_project",
    "__version__",
]
