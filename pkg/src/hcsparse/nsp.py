"""Null space property of a unit inner product frame.

A frame has the NSP of order s when every nonzero kernel element d of the
synthesis morphism keeps strictly less than half of its norm1 on any s
indices. Deciding this exactly is hard, so two one-sided tools are
provided: :func:`nsp_coherence_certificate` (sound when it says yes) and
:func:`nsp_falsify` (sound when it returns a witness).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .algebra import op_norms
from .errors import InconsistencyError, InvalidInputError
from .frame import bound_certifies, sparsity_bound
from .module import DEFAULT_ZERO_TOL, as_vector, complement, make_support, norm1, norm2, restrict
from .solvers import DEFAULT_FEAS_TOL, DEFAULT_RANK_TOL, synthesis_matrix, unvec_blocks

#: Slack on ``norm1(d) - 2 norm1(d_M)``; the strict inequality makes equality a violation.
STRICT_SLACK = 1e-12

#: Cap on the number of index subsets probed for sparse kernel elements.
SUBSET_BUDGET = 2000


@dataclass
class NspWitness:
    """Kernel element `d` and support `M` with ``lhs >= rhs`` (up to slack)."""

    order: int
    d: np.ndarray
    M: tuple
    lhs: float
    rhs: float


def kernel_basis(F, rank_tol=DEFAULT_RANK_TOL):
    """Orthonormal (flattened Euclidean) basis of the synthesis kernel.

    Right singular vectors of the flattened synthesis matrix whose
    singular value is at most ``rank_tol * sigma_max``, returned as
    ``(n, k, k)`` coefficient vectors.
    """
    return _kernel_vectors(synthesis_matrix(F), F.k, rank_tol)


def _kernel_vectors(A, k, rank_tol):
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    if s.size == 0 or s[0] == 0:
        rank = 0
    else:
        rank = int(np.count_nonzero(s > rank_tol * s[0]))
    null = vh[rank:].conj()
    return [unvec_blocks(v, k) for v in null]


def worst_support(d, order):
    """The `order` indices carrying the largest block norms.

    Ties go to the lower index. This maximizes ``norm1(restrict(d, M))``
    over all ``|M| <= order``.
    """
    d = as_vector(d)
    n = d.shape[0]
    if not 1 <= order <= n:
        raise InvalidInputError(f"order must lie in [1, {n}], got {order}")
    norms = op_norms(d)
    top = np.argsort(-norms, kind="stable")[:order]
    return tuple(sorted(int(j) for j in top))


def nsp_coherence_certificate(F, order, zero_tol=DEFAULT_ZERO_TOL):
    """True when the coherence bound proves the NSP of this order."""
    return bound_certifies(order, sparsity_bound(F.coherence, zero_tol))


def _candidates(F, A, basis, max_order, num_samples, rng):
    """Yield batches of unit-norm kernel candidates, shape ``(c, n, k, k)``."""
    n, k = F.n, F.k
    B = np.stack(basis)
    yield B
    if len(basis) > 1:
        i, j = np.triu_indices(len(basis), 1)
        yield np.concatenate([B[i] + B[j], B[i] - B[j]]) / np.sqrt(2.0)
    # kernel elements supported on few indices; catches duplicated vectors
    k2 = k * k
    sparse = []
    probed = 0
    for size in range(2, min(max_order + 1, n) + 1):
        if probed + comb(n, size) > SUBSET_BUDGET:
            break
        for S in itertools.combinations(range(n), size):
            probed += 1
            cols = np.concatenate([np.arange(j * k2, (j + 1) * k2) for j in S])
            for v in _kernel_vectors(A[:, cols], k, DEFAULT_RANK_TOL):
                full = np.zeros((n, k, k), dtype=np.complex128)
                full[list(S)] = v
                sparse.append(full)
    if sparse:
        yield np.stack(sparse)
    dim = len(basis)
    flat = B.reshape(dim, -1)
    batch = 2048
    for start in range(0, num_samples, batch):
        c = min(batch, num_samples - start)
        g = rng.standard_normal((c, dim)) + 1j * rng.standard_normal((c, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        yield (g @ flat).reshape(c, n, k, k)


def _scan(F, orders, num_samples, seed, rank_tol):
    """First violating candidate for each requested order (or None)."""
    orders = sorted(set(orders))
    found = {s: None for s in orders}
    A = synthesis_matrix(F)
    basis = _kernel_vectors(A, F.k, rank_tol)
    if not basis or not orders:
        return found
    rng = np.random.default_rng(seed)
    for batch in _candidates(F, A, basis, orders[-1], num_samples, rng):
        norms = op_norms(batch)
        total = norms.sum(axis=1)
        ranked = -np.sort(-norms, axis=1)
        head = np.cumsum(ranked, axis=1)
        for s in orders:
            if found[s] is not None:
                continue
            lhs = head[:, s - 1]
            bad = np.flatnonzero(total - 2.0 * lhs <= STRICT_SLACK)
            if bad.size:
                d = batch[bad[0]]
                M = worst_support(d, s)
                found[s] = _checked_witness(F, s, d, M)
        if all(w is not None for w in found.values()):
            break
    return found


def _checked_witness(F, order, d, M):
    lhs = norm1(restrict(d, M))
    rhs = 0.5 * norm1(d)
    w = NspWitness(order=order, d=d, M=M, lhs=lhs, rhs=rhs)
    if norm2(F.synthesis(d)) > DEFAULT_FEAS_TOL or lhs < rhs - STRICT_SLACK or len(M) > order:
        raise InconsistencyError(f"falsifier produced an invalid witness: {w}")
    return w


def nsp_falsify(F, order, num_samples=10000, seed=0, rank_tol=DEFAULT_RANK_TOL):
    """Search the kernel for a violation of the NSP of the given order.

    Candidates, in this order: the kernel basis, normalized pairwise sums
    and differences of basis elements, kernel elements supported on at
    most ``order + 1`` indices (when the subset count is small), and
    `num_samples` uniform draws from the kernel's unit sphere.

    Returns
    -------
    NspWitness or None
      A witness disproves the NSP. ``None`` certifies nothing.
    """
    if order < 1:
        raise InvalidInputError("order must be >= 1")
    if order > F.n:
        raise InvalidInputError(f"order {order} exceeds n = {F.n}")
    return _scan(F, [order], num_samples, seed, rank_tol)[order]


def nsp_falsify_orders(F, orders, num_samples=10000, seed=0, rank_tol=DEFAULT_RANK_TOL):
    """:func:`nsp_falsify` for several orders over one shared candidate stream."""
    for s in orders:
        if not 1 <= s <= F.n:
            raise InvalidInputError(f"order {s} outside [1, {F.n}]")
    return _scan(F, orders, num_samples, seed, rank_tol)


def nonuniqueness_witness(F, w, feas_tol=DEFAULT_FEAS_TOL):
    """Turn an NSP violation into two competing representations.

    With ``c = d_M`` and ``b = -d_{M^c}``, both synthesize the same x while
    ``norm1(b) <= norm1(c)``, so the sparse c is not the strict unique
    norm1 minimizer.

    Returns
    -------
    c, b : ndarray
      Coefficient vectors.
    x : ndarray
      Their common synthesis.
    """
    d = as_vector(w.d, k=F.k, length=F.n)
    M = make_support(w.M, F.n)
    if norm2(F.synthesis(d)) > feas_tol:
        raise InvalidInputError("witness vector is not in the synthesis kernel")
    c = restrict(d, M)
    b = -restrict(d, complement(M, F.n))
    x = F.synthesis(c)
    if norm2(F.synthesis(b) - x) > feas_tol:
        raise InvalidInputError("competing representation is infeasible")
    if norm1(b) > norm1(c) + 1e-12:
        raise InvalidInputError(
            f"witness does not violate the NSP: norm1(b)={norm1(b):.17g} > norm1(c)={norm1(c):.17g}"
        )
    return c, b, x
