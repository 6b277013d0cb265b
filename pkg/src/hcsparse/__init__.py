"""Sparse recovery over free Hilbert C*-modules on matrix algebras.

Coefficients, module vectors and frames are plain complex ndarrays of
shape ``(n, k, k)`` and ``(n, m, k, k)``; see :mod:`hcsparse.module`.
"""

from .errors import InconsistencyError, InvalidInputError, NotAFrameError, NumericalError
from .frame import ModularFrame, orthonormal_basis_frame, random_unit_frame, sparsity_bound
from .module import inner_product, norm0, norm1, norm2, restrict
from .nsp import (
    NspWitness,
    kernel_basis,
    nonuniqueness_witness,
    nsp_coherence_certificate,
    nsp_falsify,
    worst_support,
)
from .solvers import SolverReport, bp_admm, flatten, l0_oracle, least_squares_on_support, prox_spectral

__all__ = [
    "InconsistencyError",
    "InvalidInputError",
    "ModularFrame",
    "NotAFrameError",
    "NspWitness",
    "NumericalError",
    "SolverReport",
    "bp_admm",
    "flatten",
    "inner_product",
    "kernel_basis",
    "l0_oracle",
    "least_squares_on_support",
    "nonuniqueness_witness",
    "norm0",
    "norm1",
    "norm2",
    "nsp_coherence_certificate",
    "nsp_falsify",
    "orthonormal_basis_frame",
    "prox_spectral",
    "random_unit_frame",
    "restrict",
    "sparsity_bound",
    "worst_support",
]
