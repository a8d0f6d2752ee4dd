"""Hexagonal tilings from 2-adic limits of nested triangulations."""

from .lattice import ADir, Coset, PPoint, QPoint, TripleCoord, WDir
from .qadic import QadicParam, classify, parse_qspec
from .triangulation import TriContext
from .marking import Patch, generate_patch

__all__ = [
    "ADir", "Coset", "PPoint", "QPoint", "TripleCoord", "WDir",
    "QadicParam", "classify", "parse_qspec", "TriContext", "Patch", "generate_patch",
]
__version__ = "0.1.0"
