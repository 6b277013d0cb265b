r"""Free Hilbert C*-modules :math:`A^n` over :math:`A = M_k(\mathbb{C})`.

A module vector of length n is stored as a ``(n, k, k)`` complex array;
block ``x[j]`` is the j-th algebra coordinate. The same representation
serves the ambient module ``A^m`` and the coefficient space ``A^n``.

Supports are tuples of strictly increasing 0-based indices. Serialized
formats and the CLI use 1-based indices; conversion happens at the I/O
boundary only.
"""

from __future__ import annotations

import numpy as np

from .algebra import adjoint, op_norm, op_norms
from .errors import InvalidInputError

#: A block counts as zero in ``norm0`` when its operator norm is at most this.
DEFAULT_ZERO_TOL = 1e-8


def as_vector(x, k=None, length=None):
    """Validate and coerce `x` to a ``(length, k, k)`` complex array."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[1] != arr.shape[2] or arr.shape[1] == 0:
        raise InvalidInputError(f"module vector must have shape (n, k, k), got {arr.shape}")
    if k is not None and arr.shape[1] != k:
        raise InvalidInputError(f"expected blocks of order {k}, got {arr.shape[1]}")
    if length is not None and arr.shape[0] != length:
        raise InvalidInputError(f"expected length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("module vector has non-finite entries")
    return arr


def zeros(length, k):
    return np.zeros((length, k, k), dtype=np.complex128)


def basis_vector(j, length, k):
    """Canonical basis vector ``e_j`` (0-based `j`): identity in slot j."""
    if not 0 <= j < length:
        raise InvalidInputError(f"basis index {j} out of range for length {length}")
    e = zeros(length, k)
    e[j] = np.eye(k)
    return e


def inner_product(x, y):
    r"""Algebra-valued inner product :math:`\sum_j x_j y_j^*`."""
    x = as_vector(x)
    y = as_vector(y)
    if x.shape != y.shape:
        raise InvalidInputError(f"shape mismatch: {x.shape} vs {y.shape}")
    return np.einsum("jab,jcb->ac", x, np.conj(y))


def norm2(d):
    """Module norm ``||sum_j d_j d_j^*||^(1/2)``."""
    d = as_vector(d)
    return float(np.sqrt(op_norm(inner_product(d, d))))


def block_norms(d):
    """Operator norm of every block, shape ``(n,)``."""
    return op_norms(as_vector(d))


def norm1(d):
    """Sum of the operator norms of the blocks."""
    return float(np.sum(block_norms(d)))


def norm0(d, zero_tol=DEFAULT_ZERO_TOL):
    """Number of blocks whose operator norm exceeds `zero_tol`."""
    if zero_tol < 0:
        raise InvalidInputError("zero_tol must be nonnegative")
    return int(np.count_nonzero(block_norms(d) > zero_tol))


def support_of(d, zero_tol=DEFAULT_ZERO_TOL):
    return tuple(int(j) for j in np.flatnonzero(block_norms(d) > zero_tol))


def make_support(indices, n):
    """Validated support: sorted, unique, each index in ``range(n)``."""
    idx = sorted(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise InvalidInputError(f"duplicate indices in support {idx}")
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise InvalidInputError(f"support {idx} out of range for length {n}")
    return tuple(idx)


def complement(M, n):
    members = set(make_support(M, n))
    return tuple(j for j in range(n) if j not in members)


def restrict(d, M):
    """``d_M``: keep the blocks indexed by `M`, zero the rest."""
    d = as_vector(d)
    M = make_support(M, d.shape[0])
    out = np.zeros_like(d)
    if M:
        out[list(M)] = d[list(M)]
    return out
