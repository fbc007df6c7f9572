"""Spectral toolkit for discrete Schroedinger operators and Jacobi matrices."""
from importlib.metadata import PackageNotFoundError, version as _version

from .errors import DomainMismatchError, HypothesisError, InsufficientSpectrumError, SizeCapError, SpecError
from .kernels import BACKEND
from .lattice import (JacobiOperator, LatticeDomain, LatticeOperator, Potential, TrialFunction,
                      make_potential)

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

__all__ = [
    "BACKEND", "DomainMismatchError", "HypothesisError", "InsufficientSpectrumError", "JacobiOperator",
    "LatticeDomain", "LatticeOperator", "Potential", "SizeCapError", "SpecError", "TrialFunction",
    "make_potential",
]
