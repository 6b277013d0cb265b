"""Plant-and-recover sweeps and NSP consistency runs.

Every random draw is derived from ``SeedSequence((seed, trial, ...))``,
so a trial can be replayed in isolation and identical configs give
byte-identical CSV output. Runtimes are kept on the records and in the
JSON summary but never in the CSV.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .algebra import ginibre, haar_unitary
from .errors import InconsistencyError, InvalidInputError
from .frame import FRAME_FAMILIES, certified_order, sparsity_bound
from .module import DEFAULT_ZERO_TOL, norm0, norm1, norm2, support_of
from .nsp import kernel_basis, nonuniqueness_witness, nsp_falsify_orders
from .solvers import CONVERGED, DEFAULT_FEAS_TOL, bp_admm, l0_oracle

log = logging.getLogger(__name__)

DISTRIBUTIONS = ("ginibre", "unitary", "scalar-gaussian")

SOLVER_DEFAULTS = {
    "rho": 1.0,
    "max_iters": 20000,
    "eps_abs": 1e-12,
    "eps_rel": 1e-10,
    "feas_tol": DEFAULT_FEAS_TOL,
    "zero_tol": DEFAULT_ZERO_TOL,
    "debias": True,
}


@dataclass
class ExperimentConfig:
    k: int
    m: int
    n: int
    sparsity_list: list = field(default_factory=lambda: [1])
    trials: int = 10
    seed: int = 0
    distribution: str = "ginibre"
    frame_family: str = "haar"
    solver: dict = field(default_factory=dict)
    oracle_cutoff: int = 14
    recovery_tol: float = 1e-6
    nsp_samples: int = 10000
    csv_path: str | None = None
    summary_path: str | None = None

    def __post_init__(self):
        if min(self.k, self.m, self.n) < 1:
            raise InvalidInputError(f"invalid shape k={self.k}, m={self.m}, n={self.n}")
        if self.trials < 1:
            raise InvalidInputError("trials must be >= 1")
        bad = [s for s in self.sparsity_list if not 1 <= s <= self.n]
        if bad:
            raise InvalidInputError(f"sparsity values {bad} outside [1, {self.n}]")
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidInputError(f"unknown distribution {self.distribution!r}")
        if self.distribution == "scalar-gaussian" and self.k != 1:
            raise InvalidInputError("scalar-gaussian coefficients require k = 1")
        if self.frame_family not in FRAME_FAMILIES:
            raise InvalidInputError(f"unknown frame family {self.frame_family!r}")
        unknown = set(self.solver) - set(SOLVER_DEFAULTS)
        if unknown:
            raise InvalidInputError(f"unknown solver parameters {sorted(unknown)}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_dict(cls, obj):
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise InvalidInputError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise InvalidInputError(str(exc)) from exc

    @property
    def solver_params(self):
        return {**SOLVER_DEFAULTS, **self.solver}


@dataclass
class TrialRecord:
    trial: int
    s: int
    mu: float
    bound: float
    bound_satisfied: bool
    bp_status: str
    bp_iterations: int
    bp_success: bool
    bp_rel_error: float
    oracle_ran: bool
    oracle_success: bool | None
    oracle_unique: bool | None
    oracle_min_cardinality: int | None
    bp_oracle_rel_diff: float | None
    bp_ms: float = 0.0
    oracle_ms: float = 0.0


#: CSV column order; runtimes are excluded to keep output reproducible.
CSV_COLUMNS = [
    "trial",
    "s",
    "mu",
    "bound",
    "bound_satisfied",
    "bp_status",
    "bp_iterations",
    "bp_success",
    "bp_rel_error",
    "oracle_ran",
    "oracle_success",
    "oracle_unique",
    "oracle_min_cardinality",
    "bp_oracle_rel_diff",
]


def _rng(seed, *keys):
    return np.random.default_rng(np.random.SeedSequence((seed,) + keys))


def plant_instance(F, s, distribution="ginibre", seed=0, zero_tol=DEFAULT_ZERO_TOL):
    """Random s-sparse coefficients `c` and their synthesis `x`.

    The support is uniform over s-subsets; nonzero blocks are i.i.d.
    complex Gaussian (``ginibre``), Haar unitaries (``unitary``) or real
    Gaussian scalars (``scalar-gaussian``, k = 1 only). Blocks with norm
    at most `zero_tol` are redrawn.
    """
    n, k = F.n, F.k
    if not 1 <= s <= n:
        raise InvalidInputError(f"sparsity {s} outside [1, {n}]")
    if distribution not in DISTRIBUTIONS:
        raise InvalidInputError(f"unknown distribution {distribution!r}")
    if distribution == "scalar-gaussian" and k != 1:
        raise InvalidInputError("scalar-gaussian coefficients require k = 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    M = sorted(int(j) for j in rng.choice(n, size=s, replace=False))
    c = np.zeros((n, k, k), dtype=np.complex128)
    for j in M:
        while True:
            if distribution == "ginibre":
                block = ginibre(k, rng)
            elif distribution == "unitary":
                block = haar_unitary(k, rng)
            else:
                block = rng.standard_normal((1, 1)).astype(np.complex128)
            if np.linalg.norm(block, 2) > zero_tol:
                break
        c[j] = block
    return c, F.synthesis(c)


def make_frame(config, trial):
    family = FRAME_FAMILIES[config.frame_family]
    return family(config.k, config.m, config.n, _rng(config.seed, trial, 0))


def _relative_error(d, c):
    return float(np.linalg.norm(d - c) / np.linalg.norm(c))


def run_trial(F, config, trial, s):
    """Plant one s-sparse instance on `F` and run both solvers on it."""
    params = config.solver_params
    mu = F.coherence
    bound = sparsity_bound(mu, params["zero_tol"])
    c, x = plant_instance(F, s, config.distribution, _rng(config.seed, trial, s), params["zero_tol"])
    planted = support_of(c, params["zero_tol"])

    t0 = time.perf_counter()
    rep = bp_admm(F, x, **params)
    bp_ms = 1e3 * (time.perf_counter() - t0)
    err = _relative_error(rep.solution, c)
    bp_ok = rep.status == CONVERGED and err <= config.recovery_tol

    oracle_ran = F.n <= config.oracle_cutoff
    o_ok = o_unique = o_card = o_diff = None
    o_ms = 0.0
    if oracle_ran:
        t0 = time.perf_counter()
        orc = l0_oracle(F, x, params["zero_tol"], params["feas_tol"])
        o_ms = 1e3 * (time.perf_counter() - t0)
        o_card = orc.min_cardinality
        o_unique = bool(orc.unique)
        o_ok = o_card == s and bool(orc.supports) and orc.supports[0] == planted
        if orc.status == CONVERGED:
            o_diff = _relative_error(rep.solution, orc.solution)
    return TrialRecord(
        trial=trial,
        s=s,
        mu=mu,
        bound=bound,
        bound_satisfied=bool(s < bound),
        bp_status=rep.status,
        bp_iterations=rep.iterations,
        bp_success=bool(bp_ok),
        bp_rel_error=err,
        oracle_ran=oracle_ran,
        oracle_success=o_ok,
        oracle_unique=o_unique,
        oracle_min_cardinality=o_card,
        bp_oracle_rel_diff=o_diff,
        bp_ms=bp_ms,
        oracle_ms=o_ms,
    )


def _rate(flags):
    flags = [f for f in flags if f is not None]
    return float(np.mean(flags)) if flags else None


def summarize(records):
    """Success rates, split by whether the coherence bound held."""
    strata = {}
    for name, keep in (("bound_satisfied", True), ("bound_violated", False)):
        rows = [r for r in records if r.bound_satisfied == keep]
        strata[name] = {
            "trials": len(rows),
            "bp_success_rate": _rate([r.bp_success for r in rows]),
            "oracle_success_rate": _rate([r.oracle_success for r in rows]),
            "oracle_unique_rate": _rate([r.oracle_unique for r in rows]),
        }
    by_s = {}
    for s in sorted({r.s for r in records}):
        rows = [r for r in records if r.s == s]
        by_s[str(s)] = {
            "trials": len(rows),
            "bound_satisfied": sum(r.bound_satisfied for r in rows),
            "bp_success_rate": _rate([r.bp_success for r in rows]),
            "oracle_success_rate": _rate([r.oracle_success for r in rows]),
        }
    sat = [r for r in records if r.bound_satisfied]
    theorem_holds = all(
        r.bp_success and (not r.oracle_ran or (r.oracle_success and r.oracle_unique)) for r in sat
    )
    return {
        "records": len(records),
        "strata": strata,
        "by_sparsity": by_s,
        "theorem_holds": theorem_holds,
        "bp_ms_total": float(sum(r.bp_ms for r in records)),
        "oracle_ms_total": float(sum(r.oracle_ms for r in records)),
    }


def run_recovery_sweep(config):
    """Run every (trial, sparsity) pair of `config`.

    One frame is drawn per trial index and shared across the sparsity
    list. Solver trouble is recorded on the trial, never raised.

    Returns
    -------
    records : list of TrialRecord
    summary : dict
    """
    records = []
    if config.sparsity_list:
        for t in range(config.trials):
            F = make_frame(config, t)
            for s in config.sparsity_list:
                records.append(run_trial(F, config, t, s))
    summary = summarize(records)
    if config.csv_path:
        with open(config.csv_path, "w", newline="") as fh:
            fh.write(records_to_csv(records))
    if config.summary_path:
        with open(config.summary_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return records, summary


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        row = asdict(r)
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def run_nsp_consistency(config, max_order=None):
    """Check the coherence certificate against the kernel falsifier.

    For each frame the certified order (largest s below the sparsity
    bound) must admit no falsifier witness; a witness there raises
    :class:`InconsistencyError`. Orders above it are searched as well and
    every witness found is turned into a non-uniqueness pair whose
    feasibility and norm comparison are re-verified.
    """
    params = config.solver_params
    max_order = config.n if max_order is None else min(max_order, config.n)
    certified = Counter()
    witnesses = Counter()
    pairs_verified = 0
    trivial_kernel = 0
    for t in range(config.trials):
        F = make_frame(config, t)
        ok, defects = F.validate_unit_inner_product()
        if not ok:
            raise InvalidInputError(f"frame {t} lacks unit inner product (defect {defects.max():.3g})")
        s_cert = certified_order(F.coherence, F.n, params["zero_tol"])
        certified[s_cert] += 1
        orders = list(range(1, max_order + 1))
        seed = np.random.SeedSequence((config.seed, t, 1))
        found = nsp_falsify_orders(F, orders, config.nsp_samples, seed)
        if not kernel_basis(F):
            trivial_kernel += 1
        for s, w in found.items():
            if w is None:
                continue
            if s <= s_cert:
                raise InconsistencyError(
                    f"frame {t}: witness at order {s} but coherence {F.coherence:.17g} certifies "
                    f"order {s_cert}; M={[j + 1 for j in w.M]}, lhs={w.lhs:.17g}, rhs={w.rhs:.17g}"
                )
            witnesses[s] += 1
            c, b, x = nonuniqueness_witness(F, w)
            if norm2(F.synthesis(b) - x) > DEFAULT_FEAS_TOL or norm1(b) > norm1(c) + 1e-12:
                raise InconsistencyError(f"frame {t}: non-uniqueness pair failed verification")
            if norm0(c) > s:
                raise InconsistencyError(f"frame {t}: sparse side has more than {s} blocks")
            pairs_verified += 1
        log.debug("frame %d: certified order %d, witnesses at %s", t, s_cert, sorted(s for s, w in found.items() if w))
    return {
        "frames": config.trials,
        "frame_family": config.frame_family,
        "certified_orders": {str(s): c for s, c in sorted(certified.items())},
        "witnesses_at_certified_orders": 0,
        "witnesses_by_order": {str(s): c for s, c in sorted(witnesses.items())},
        "pairs_verified": pairs_verified,
        "trivial_kernel_frames": trivial_kernel,
    }

