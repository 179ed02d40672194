"""Exact computations for the 1-2 model on the hexagonal lattice."""
from .hexlattice import LatticeParams, build_torus, decorate, nw_path
from .kasteleyn import assemble_fundamental, assemble_torus, char_poly, symbol
from .spectral import classify_phase, free_energy

__all__ = [
    "LatticeParams",
    "assemble_fundamental",
    "assemble_torus",
    "build_torus",
    "char_poly",
    "classify_phase",
    "decorate",
    "free_energy",
    "nw_path",
    "symbol",
]
