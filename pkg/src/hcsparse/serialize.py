"""JSON encodings of matrices, module vectors, frames and reports.

Matrices are nested row-major lists of ``[re, im]`` pairs. Indices in
supports are 1-based on the wire.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError
from .frame import ModularFrame
from .module import as_vector


def matrix_to_json(a):
    a = np.asarray(a, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(obj):
    try:
        arr = np.asarray(obj, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed matrix: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"matrix must be k x k x [re, im], got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def vector_to_json(x, length_key="n"):
    x = as_vector(x)
    return {"k": x.shape[1], length_key: x.shape[0], "blocks": [matrix_to_json(b) for b in x]}


def vector_from_json(obj):
    """Decode a coefficient vector (``"n"``) or module vector (``"m"``)."""
    if not isinstance(obj, dict) or "blocks" not in obj:
        raise InvalidInputError("vector JSON needs a 'blocks' field")
    blocks = [matrix_from_json(b) for b in obj["blocks"]]
    if not blocks:
        raise InvalidInputError("vector has no blocks")
    length = obj.get("n", obj.get("m", len(blocks)))
    return as_vector(np.stack(blocks), k=obj.get("k"), length=length)


def frame_to_json(F):
    return {
        "k": F.k,
        "m": F.m,
        "n": F.n,
        "vectors": [[matrix_to_json(b) for b in vec] for vec in F.vectors],
    }


def frame_from_json(obj):
    try:
        k, m, n = int(obj["k"]), int(obj["m"]), int(obj["n"])
        vecs = np.stack([np.stack([matrix_from_json(b) for b in vec]) for vec in obj["vectors"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed frame JSON: {exc}") from exc
    if vecs.shape != (n, m, k, k):
        raise InvalidInputError(f"frame shape {vecs.shape} disagrees with header (n={n}, m={m}, k={k})")
    return ModularFrame(vecs)


def _num(v):
    # JSON has no inf/nan literals
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return None
    return v


def report_to_json(report):
    out = {
        "status": report.status,
        "objective": _num(float(report.objective)),
        "residual": float(report.feasibility_residual),
        "iterations": int(report.iterations),
        "solution": vector_to_json(report.solution),
    }
    if report.min_cardinality is not None or report.supports is not None:
        out["min_cardinality"] = report.min_cardinality
        out["supports"] = [[j + 1 for j in M] for M in report.supports]
        out["unique"] = bool(report.unique)
    return out


def witness_to_json(w):
    return {
        "order": int(w.order),
        "M": [j + 1 for j in w.M],
        "lhs": float(w.lhs),
        "rhs": float(w.rhs),
        "d": vector_to_json(w.d),
    }
