r"""Solvers for the block sparse recovery problems on coefficient space.

Two problems share the constraint :math:`\sum_j d_j \tau_j = x`:

* minimum block cardinality, solved exactly by :func:`l0_oracle` through
  support enumeration (desk-scale n only);
* minimum block :math:`\ell_1` norm :math:`\sum_j \|d_j\|`, solved by
  :func:`bp_admm`, an ADMM splitting between the affine constraint set
  and the blockwise spectral-norm penalty.

Both operate on the linearization built by :func:`flatten`: blocks are
vectorized by column stacking, so left multiplication ``d_j tau_{j,i}``
becomes ``kron(tau_{j,i}.T, I_k) @ vec(d_j)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .algebra import singular_values
from .errors import InvalidInputError
from .module import DEFAULT_ZERO_TOL, as_vector, make_support, norm1, norm2, zeros

FLATTENING = "column-stacking"

DEFAULT_FEAS_TOL = 1e-8
DEFAULT_RANK_TOL = 1e-10

# rho changes only every REBALANCE_EVERY iterations, and finitely often, so
# the iteration eventually runs at a fixed penalty
REBALANCE_EVERY = 50
MAX_REBALANCES = 30

CONVERGED = "converged"
MAX_ITERS = "max_iters"
INFEASIBLE = "infeasible"


def vec_blocks(d):
    """Column-stack every block of a ``(n, k, k)`` array into one vector."""
    return np.ascontiguousarray(np.swapaxes(d, -1, -2)).reshape(-1)


def unvec_blocks(v, k):
    """Inverse of :func:`vec_blocks`."""
    return np.swapaxes(np.asarray(v).reshape(-1, k, k), -1, -2).copy()


def synthesis_matrix(F):
    """``(m k^2, n k^2)`` complex matrix of the synthesis morphism."""
    k, m, n = F.k, F.m, F.n
    k2 = k * k
    eye = np.eye(k)
    A = np.empty((m * k2, n * k2), dtype=np.complex128)
    for i in range(m):
        for j in range(n):
            A[i * k2:(i + 1) * k2, j * k2:(j + 1) * k2] = np.kron(F.vectors[j, i].T, eye)
    return A


@dataclass(eq=False)
class FlattenedSystem:
    """Linear system ``matrix @ vec(d) = rhs`` equivalent to ``synthesis(d) = x``."""

    matrix: np.ndarray
    rhs: np.ndarray
    k: int
    m: int
    n: int
    convention: str = FLATTENING

    def columns(self, M):
        k2 = self.k * self.k
        return np.concatenate([np.arange(j * k2, (j + 1) * k2) for j in M]) if M else np.array([], dtype=int)

    @cached_property
    def pinv(self):
        return np.linalg.pinv(self.matrix, rcond=DEFAULT_RANK_TOL)

    @cached_property
    def _projector(self):
        # affine projection v -> P v + q onto {matrix @ v = rhs}
        P = np.eye(self.matrix.shape[1]) - self.pinv @ self.matrix
        q = self.pinv @ self.rhs
        return P, q

    def project(self, v):
        P, q = self._projector
        return P @ v + q

    def residual_norm(self, v):
        """Module norm of ``synthesis(d) - x`` for ``v = vec(d)``."""
        r = self.matrix @ v - self.rhs
        return norm2(unvec_blocks(r, self.k))


def flatten(F, x):
    """Linearize ``synthesis(F, d) = x`` under column stacking."""
    x = as_vector(x, k=F.k, length=F.m)
    return FlattenedSystem(synthesis_matrix(F), vec_blocks(x), F.k, F.m, F.n)


@dataclass
class SolverReport:
    solution: np.ndarray
    objective: float
    feasibility_residual: float
    iterations: int
    status: str
    min_cardinality: int | None = None
    supports: list = field(default=None)
    unique: bool | None = None


def least_squares_on_support(F, x, M, tol=DEFAULT_RANK_TOL, system=None):
    """Best fit of `x` using only the frame vectors indexed by `M`.

    Parameters
    ----------
    F : ModularFrame
    x : array_like
      Target in ``A^m``.
    M : iterable of int
      0-based support.
    tol : float
      Relative singular value threshold for the rank test.
    system : FlattenedSystem, optional
      Reuse a prebuilt linearization of ``(F, x)``.

    Returns
    -------
    solution : ndarray
      Full ``(n, k, k)`` coefficient vector, zero off `M`. Minimum-norm
      when the restricted system is rank deficient.
    residual : float
      Module norm of ``synthesis(solution) - x``.
    full_column_rank : bool
    """
    sys_ = system if system is not None else flatten(F, x)
    M = make_support(M, F.n)
    sol = zeros(F.n, F.k)
    if not M:
        return sol, norm2(unvec_blocks(sys_.rhs, F.k)), True
    cols = sys_.columns(M)
    sub = sys_.matrix[:, cols]
    u, s, vh = np.linalg.svd(sub, full_matrices=False)
    rank = int(np.count_nonzero(s > tol * s[0])) if s[0] > 0 else 0
    coef = vh[:rank].conj().T @ ((u[:, :rank].conj().T @ sys_.rhs) / s[:rank])
    sol[list(M)] = unvec_blocks(coef, F.k)
    residual = norm2(unvec_blocks(sub @ coef - sys_.rhs, F.k))
    return sol, residual, rank == len(cols)


def l0_oracle(F, x, zero_tol=DEFAULT_ZERO_TOL, feas_tol=DEFAULT_FEAS_TOL, max_card=None):
    """Exhaustive minimum block cardinality representation of `x`.

    Supports are visited by increasing size, lexicographically within a
    size. The search stops after the first size at which some support
    fits within `feas_tol`; every fitting support of that size is listed.
    The minimizer is declared unique when exactly one support fits and
    the restricted system has full column rank, which rules out a
    second representation of the same or smaller size.
    """
    x = as_vector(x, k=F.k, length=F.m)
    n = F.n
    max_card = n if max_card is None else max_card
    if not 0 <= max_card <= n:
        raise InvalidInputError(f"max_card must lie in [0, {n}], got {max_card}")
    system = flatten(F, x)
    visited = 0
    for size in range(max_card + 1):
        fits = []
        for M in itertools.combinations(range(n), size):
            visited += 1
            sol, res, full_rank = least_squares_on_support(F, x, M, system=system)
            if res <= feas_tol:
                fits.append((M, sol, res, full_rank))
        if fits:
            M0, sol, res, full_rank = fits[0]
            return SolverReport(
                solution=sol,
                objective=float(size),
                feasibility_residual=res,
                iterations=visited,
                status=CONVERGED,
                min_cardinality=size,
                supports=[M for M, *_ in fits],
                unique=len(fits) == 1 and full_rank,
            )
    return SolverReport(
        solution=zeros(n, F.k),
        objective=float("nan"),
        feasibility_residual=norm2(x),
        iterations=visited,
        status=INFEASIBLE,
        min_cardinality=None,
        supports=[],
        unique=False,
    )


def _project_l1_ball_sorted(s, radius):
    """Project descending nonnegative rows of `s` onto the l1 ball; returns the threshold.

    For each row the projection is ``max(s - theta, 0)``; rows already
    inside the ball get ``theta = 0``.
    """
    cs = np.cumsum(s, axis=-1)
    idx = np.arange(1, s.shape[-1] + 1)
    cond = s - (cs - radius) / idx > 0
    rho = s.shape[-1] - np.argmax(cond[..., ::-1], axis=-1)
    theta = (np.take_along_axis(cs, rho[..., None] - 1, axis=-1)[..., 0] - radius) / rho
    return np.where(cs[..., -1] <= radius, 0.0, np.maximum(theta, 0.0))


def prox_spectral_blocks(stack, lam):
    """Blockwise :func:`prox_spectral` over a ``(..., k, k)`` stack."""
    u, s, vh = np.linalg.svd(stack)
    theta = _project_l1_ball_sorted(s, lam)
    shrunk = np.minimum(s, theta[..., None])
    return (u * shrunk[..., None, :]) @ vh


def prox_spectral(a, lam):
    r"""Proximal map of ``lam * ||.||_op`` in the Frobenius metric.

    .. math::
      \mathrm{prox}(a) = \arg\min_z \tfrac12 \|z - a\|_F^2 + \lambda \|z\|

    By Moreau decomposition this is ``a`` minus its projection onto the
    nuclear-norm ball of radius ``lam``, which amounts to clipping the
    singular values at the level ``theta`` where the excess above it sums
    to ``lam``.
    """
    if lam <= 0:
        raise InvalidInputError("lam must be positive")
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    return prox_spectral_blocks(a, lam)


def bp_admm(
    F,
    x,
    rho=1.0,
    max_iters=20000,
    eps_abs=1e-12,
    eps_rel=1e-10,
    feas_tol=DEFAULT_FEAS_TOL,
    zero_tol=DEFAULT_ZERO_TOL,
    debias=True,
    system=None,
):
    """Minimum block l1 norm representation of `x` by ADMM.

    Splits ``min f(d) + g(z) s.t. d = z`` with f the indicator of the
    affine constraint set and g the sum of block operator norms. The
    d-step is an exact affine projection (precomputed pseudoinverse), the
    z-step is :func:`prox_spectral` per block with parameter ``1/rho``.
    Every 50 iterations the penalty is rebalanced by a factor 2 when one
    residual exceeds the other tenfold, at most 30 times in total.

    With `debias`, the support of the final z iterate is refitted by
    least squares; the refit replaces the iterate when it is feasible and
    its norm1 does not exceed the iterate's by more than 1e-9.

    Returns
    -------
    SolverReport
      ``status`` is ``"max_iters"`` when the stopping rule never fired
      (the last feasible iterate is returned) and ``"infeasible"`` when
      the returned point violates `feas_tol`.
    """
    x = as_vector(x, k=F.k, length=F.m)
    k = F.k
    if not np.any(x):
        return SolverReport(zeros(F.n, k), 0.0, 0.0, 0, CONVERGED)
    sys_ = system if system is not None else flatten(F, x)
    P, q = sys_._projector
    p = P.shape[0]
    n = F.n

    d = q.copy()
    z = d.copy()
    u = np.zeros_like(d)
    status = MAX_ITERS
    it = 0
    sqrt_p = np.sqrt(p)
    rebalances = 0
    for it in range(1, max_iters + 1):
        d = P @ (z - u) + q
        z_old = z
        # blocks are vec'd transposes; prox commutes with transposition
        z = prox_spectral_blocks((d + u).reshape(n, k, k), 1.0 / rho).reshape(-1)
        u = u + d - z
        r = np.linalg.norm(d - z)
        s = rho * np.linalg.norm(z - z_old)
        eps_pri = sqrt_p * eps_abs + eps_rel * max(np.linalg.norm(d), np.linalg.norm(z))
        eps_dual = sqrt_p * eps_abs + eps_rel * rho * np.linalg.norm(u)
        if r <= eps_pri and s <= eps_dual:
            status = CONVERGED
            break
        if it % REBALANCE_EVERY or rebalances >= MAX_REBALANCES:
            continue
        if r > 10 * s:
            rho *= 2.0
            u /= 2.0
            rebalances += 1
        elif s > 10 * r:
            rho /= 2.0
            u *= 2.0
            rebalances += 1

    sol = unvec_blocks(d, k)
    res = sys_.residual_norm(d)
    if debias:
        blocks = unvec_blocks(z, k)
        M = tuple(int(j) for j in np.flatnonzero(singular_values(blocks)[:, 0] > zero_tol))
        fit, fit_res, _ = least_squares_on_support(F, x, M, system=sys_)
        if fit_res <= feas_tol and norm1(fit) <= norm1(sol) + 1e-9:
            sol, res = fit, fit_res
    if res > feas_tol:
        status = INFEASIBLE
    return SolverReport(sol, norm1(sol), res, it, status)
