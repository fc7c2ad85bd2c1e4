"""Tabu search for QUBO with pluggable neighborhood samplers."""

from .kernels import BACKEND
from .qubo import (
    IsingModel,
    MoveTable,
    ParseError,
    Qubo,
    SubProblem,
    apply_flip,
    clamp,
    evaluate,
    init_move_table,
    load_orlib,
    parse_orlib,
    to_ising,
    write_orlib,
)

__version__ = "0.1.0"
