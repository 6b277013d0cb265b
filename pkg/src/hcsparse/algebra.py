r"""The matrix C*-algebra :math:`M_k(\mathbb{C})`.

Elements are plain ``(k, k)`` complex ndarrays. Functions that accept a
stack of elements (shape ``(..., k, k)``) say so explicitly; everything
else works on a single element.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, NumericalError

#: Relative tolerance for positivity and zero tests.
DEFAULT_TOL = 1e-10


def as_element(a, k=None):
    """Coerce `a` to a ``(k, k)`` complex128 array, validating shape.

    Scalars are promoted to ``1 x 1`` elements.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidInputError(f"algebra element must be square, got shape {arr.shape}")
    if k is not None and arr.shape[0] != k:
        raise InvalidInputError(f"expected order {k}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("algebra element has non-finite entries")
    return arr


def identity(k):
    return np.eye(k, dtype=np.complex128)


def zero(k):
    return np.zeros((k, k), dtype=np.complex128)


def adjoint(a):
    """Conjugate transpose; acts on the last two axes so stacks work too."""
    return np.conj(np.swapaxes(a, -1, -2))


def svd(a):
    """Singular value decomposition ``a = u @ diag(s) @ vh``.

    Parameters
    ----------
    a : array_like
      Element of order k, or a stack of them.

    Returns
    -------
    u, s, vh : ndarray
      Factors with `s` nonnegative and sorted in descending order.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("svd input has non-finite entries")
    try:
        return np.linalg.svd(arr)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for input of shape {arr.shape}: {exc}") from exc


def singular_values(a):
    arr = np.asarray(a, dtype=np.complex128)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("input has non-finite entries")
    try:
        return np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for input of shape {arr.shape}: {exc}") from exc


def op_norm(a):
    """C*-norm of `a`, i.e. its largest singular value."""
    return float(singular_values(as_element(a))[0])


def op_norms(stack):
    """Operator norms of a stack of elements, shape ``(..., k, k) -> (...)``."""
    stack = np.asarray(stack, dtype=np.complex128)
    if stack.size == 0:
        return np.zeros(stack.shape[:-2])
    return singular_values(stack)[..., 0]


def nuclear_norm(a):
    return float(np.sum(singular_values(as_element(a))))


def hermitian_part(a):
    return 0.5 * (a + adjoint(a))


def is_positive(a, tol=DEFAULT_TOL):
    """Test ``a >= 0`` in the C*-order.

    The element must be Hermitian up to ``tol * max(1, ||a||)`` and the
    eigenvalues of its Hermitian part must all be ``>= -tol``.
    """
    if tol < 0:
        raise InvalidInputError("tol must be nonnegative")
    a = as_element(a)
    scale = max(1.0, op_norm(a))
    if op_norm(a - adjoint(a)) > tol * scale:
        return False
    return bool(np.linalg.eigvalsh(hermitian_part(a))[0] >= -tol)


def ginibre(k, rng, size=()):
    """I.i.d. standard complex Gaussian entries, ``E|z|^2 = 1``."""
    lead = size if isinstance(size, tuple) else (size,)
    shape = lead + (k, k)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def haar_unitary(n, rng):
    """Haar-distributed unitary of order `n`.

    QR of a Ginibre matrix, with the phases of ``diag(R)`` moved into Q so
    that the factorization is unique and the law is invariant.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    phases = d / np.abs(d)
    return q * phases[np.newaxis, :]
