r"""Modular frames for the free module :math:`A^m`.

A frame of n vectors is stored as a ``(n, m, k, k)`` array: ``tau[j, i]``
is the i-th algebra coordinate of the j-th frame vector.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .algebra import DEFAULT_TOL, adjoint, haar_unitary, op_norms
from .errors import InvalidInputError, NotAFrameError
from .module import DEFAULT_ZERO_TOL, as_vector


class ModularFrame:
    """n vectors in ``A^m`` with lazily cached Gram data.

    The vector array is frozen at construction. Cached quantities are pure
    functions of it, so concurrent first access can at worst compute the
    same value twice.

    Parameters
    ----------
    vectors : array_like
      Shape ``(n, m, k, k)``.
    check_unit : bool
      Raise :class:`InvalidInputError` unless every ``<tau_j, tau_j>`` is
      the identity within `unit_tol`.
    unit_tol : float
      Tolerance for the unit inner product check.
    """

    def __init__(self, vectors, check_unit=False, unit_tol=DEFAULT_TOL):
        arr = np.array(vectors, dtype=np.complex128)
        if arr.ndim != 4 or arr.shape[2] != arr.shape[3] or 0 in arr.shape:
            raise InvalidInputError(f"frame must have shape (n, m, k, k), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("frame has non-finite entries")
        arr.flags.writeable = False
        self.vectors = arr
        if check_unit:
            ok, defects = self.validate_unit_inner_product(unit_tol)
            if not ok:
                worst = int(np.argmax(defects))
                raise InvalidInputError(
                    f"frame lacks unit inner product: defect {defects[worst]:.3g} at index {worst + 1}"
                )

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def m(self):
        return self.vectors.shape[1]

    @property
    def k(self):
        return self.vectors.shape[2]

    def __repr__(self):
        return f"ModularFrame(k={self.k}, m={self.m}, n={self.n})"

    def synthesis(self, d):
        r"""Synthesis morphism :math:`d \mapsto \sum_j d_j \tau_j`."""
        d = as_vector(d, k=self.k, length=self.n)
        return np.einsum("jab,jibc->iac", d, self.vectors)

    def analysis(self, x):
        r"""Analysis morphism :math:`x \mapsto (\langle x, \tau_j\rangle)_j`."""
        x = as_vector(x, k=self.k, length=self.m)
        return np.einsum("iab,jicb->jac", x, np.conj(self.vectors))

    @cached_property
    def gram(self):
        """``(n, n, k, k)`` array with entry ``(j, l) = <tau_j, tau_l>``."""
        g = np.einsum("jiab,licb->jlac", self.vectors, np.conj(self.vectors))
        # enforce exact Hermitian block structure G_lj = G_jl^*
        upper = np.triu_indices(self.n, 1)
        g[upper[1], upper[0]] = adjoint(g[upper])
        g.flags.writeable = False
        return g

    def validate_unit_inner_product(self, unit_tol=DEFAULT_TOL):
        """Check ``<tau_j, tau_j> = I`` for every j.

        Returns
        -------
        ok : bool
        defects : ndarray
          ``||<tau_j, tau_j> - I||`` per index.
        """
        if unit_tol < 0:
            raise InvalidInputError("unit_tol must be nonnegative")
        diag = np.einsum("jiab,jicb->jac", self.vectors, np.conj(self.vectors))
        defects = op_norms(diag - np.eye(self.k))
        return bool(np.max(defects) <= unit_tol), defects

    @cached_property
    def frame_operator_matrix(self):
        r"""The ``mk x mk`` Hermitian matrix with block ``(i, l) = \sum_j \tau_{j,i}^* \tau_{j,l}``.

        Stacking the row blocks ``[tau_{j,1} ... tau_{j,m}]`` into an
        ``(nk, mk)`` matrix T gives this as ``T^* T``.
        """
        t = self.row_matrix
        g = t.conj().T @ t
        g = 0.5 * (g + g.conj().T)
        g.flags.writeable = False
        return g

    @property
    def row_matrix(self):
        """``(nk, mk)`` matrix whose j-th row block is ``[tau_{j,1} ... tau_{j,m}]``."""
        n, m, k = self.n, self.m, self.k
        return self.vectors.transpose(0, 2, 1, 3).reshape(n * k, m * k)

    @cached_property
    def _frame_eigs(self):
        return np.linalg.eigvalsh(self.frame_operator_matrix)

    def frame_bounds(self, tol=DEFAULT_TOL):
        """Optimal frame bounds ``(a, b)``.

        Raises
        ------
        NotAFrameError
          If the smallest eigenvalue is ``<= tol``.
        """
        eigs = self._frame_eigs
        a, b = float(eigs[0]), float(eigs[-1])
        if a <= tol:
            raise NotAFrameError(f"lower frame bound {a:.3g} <= {tol:g}; vectors do not generate A^{self.m}")
        return a, b

    @cached_property
    def coherence(self):
        """Largest operator norm of an off-diagonal Gram entry."""
        if self.n < 2:
            raise InvalidInputError("coherence needs at least two frame vectors")
        j, l = np.triu_indices(self.n, 1)
        return float(np.max(op_norms(self.gram[j, l])))

    def sparsity_bound(self, zero_tol=DEFAULT_ZERO_TOL):
        return sparsity_bound(self.coherence, zero_tol)


def sparsity_bound(mu, zero_tol=DEFAULT_ZERO_TOL):
    """``(1 + 1/mu) / 2``, or ``inf`` once `mu` is numerically zero."""
    if mu <= zero_tol:
        return float("inf")
    return 0.5 * (1.0 + 1.0 / mu)


#: Margin below the sparsity bound; a computed coherence of 1 - 1e-16 must
#: not certify order 1 through a bound of 1 + 1e-16.
CERT_MARGIN = 1e-9


def bound_certifies(s, bound):
    """True when sparsity `s` lies strictly below `bound`, with margin."""
    return bool(s < bound - CERT_MARGIN)


def certified_order(mu, n, zero_tol=DEFAULT_ZERO_TOL):
    """Largest s in ``[0, n]`` certified by ``sparsity_bound(mu)``."""
    bound = sparsity_bound(mu, zero_tol)
    if np.isinf(bound):
        return n
    return min(n, int(np.ceil(bound - CERT_MARGIN)) - 1)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _unit_rows(mat, k, m):
    """Reshape a ``(k, mk)`` row block into ``(m, k, k)`` module coordinates."""
    return mat.reshape(k, m, k).transpose(1, 0, 2)


def orthonormal_basis_frame(k, m):
    """The canonical module basis ``e_1, ..., e_m`` of ``A^m``."""
    vecs = np.zeros((m, m, k, k), dtype=np.complex128)
    for i in range(m):
        vecs[i, i] = np.eye(k)
    return ModularFrame(vecs)


def random_unit_frame(k, m, n, seed):
    """n unit inner product vectors drawn from Haar unitaries.

    Each vector is the first k rows of an independent Haar unitary of
    order ``mk``, cut into m blocks of order k, so ``<tau_j, tau_j> = I``
    to machine precision. Deterministic in `seed`.
    """
    if min(k, m, n) < 1:
        raise InvalidInputError(f"invalid shape k={k}, m={m}, n={n}")
    rng = _rng(seed)
    vecs = np.empty((n, m, k, k), dtype=np.complex128)
    for j in range(n):
        vecs[j] = _unit_rows(haar_unitary(m * k, rng)[:k], k, m)
    return ModularFrame(vecs)


def basis_plus_flat_frame(k, m, n, seed):
    """Module basis of ``A^m`` followed by ``n - m`` flat unit vectors.

    Every coordinate of a flat vector is a Haar unitary scaled by
    ``1/sqrt(m)``, so its coherence with the basis is exactly ``1/sqrt(m)``.
    This is the low-coherence family used to exercise sparsity 2 at small n.
    """
    if n < m or min(k, m) < 1:
        raise InvalidInputError(f"need n >= m >= 1, got m={m}, n={n}")
    rng = _rng(seed)
    vecs = np.zeros((n, m, k, k), dtype=np.complex128)
    for i in range(m):
        vecs[i, i] = np.eye(k)
    for j in range(m, n):
        for i in range(m):
            vecs[j, i] = haar_unitary(k, rng) / np.sqrt(m)
    return ModularFrame(vecs)


def duplicated_frame(k, m, n, seed):
    """Haar unit frame in which one random vector is copied onto another."""
    if n < 2:
        raise InvalidInputError("need n >= 2 to duplicate a vector")
    rng = _rng(seed)
    vecs = np.array(random_unit_frame(k, m, n, rng).vectors)
    src, dst = rng.choice(n, size=2, replace=False)
    vecs[dst] = vecs[src]
    return ModularFrame(vecs)


def near_duplicated_frame(k, m, n, seed, eps=1e-3):
    """Like :func:`duplicated_frame` but the copy is perturbed by `eps`.

    The perturbed row block is re-orthonormalized by its polar factor to
    keep unit inner product.
    """
    if n < 2:
        raise InvalidInputError("need n >= 2 to duplicate a vector")
    rng = _rng(seed)
    vecs = np.array(random_unit_frame(k, m, n, rng).vectors)
    src, dst = rng.choice(n, size=2, replace=False)
    rows = vecs[src].transpose(1, 0, 2).reshape(k, m * k)
    z = rng.standard_normal(rows.shape) + 1j * rng.standard_normal(rows.shape)
    rows = rows + eps * z / np.linalg.norm(z)
    u, _, vh = np.linalg.svd(rows, full_matrices=False)
    vecs[dst] = _unit_rows(u @ vh, k, m)
    return ModularFrame(vecs)


FRAME_FAMILIES = {
    "haar": random_unit_frame,
    "basis_plus_flat": basis_plus_flat_frame,
    "duplicated": duplicated_frame,
    "near_duplicated": near_duplicated_frame,
}
