"""Block sparse recovery over matrix-algebra frames, from the command line.

Exit codes: 0 success, 2 invalid input, 3 solver non-convergence,
4 fatal inconsistency.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import InconsistencyError, InvalidInputError
from .frame import FRAME_FAMILIES, certified_order
from .harness import ExperimentConfig, records_to_csv, run_nsp_consistency, run_recovery_sweep
from .serialize import frame_from_json, frame_to_json, report_to_json, vector_from_json
from .solvers import CONVERGED, bp_admm, l0_oracle

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3
EXIT_INCONSISTENT = 4


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read {path}: {exc}") from exc


def _emit(obj):
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, allow_nan=False)
    sys.stdout.write("\n")


def cmd_coherence(args):
    F = frame_from_json(_load_json(args.frame))
    ok, defects = F.validate_unit_inner_product(args.unit_tol)
    a, b = F.frame_bounds()
    mu = F.coherence
    bound = F.sparsity_bound()
    _emit(
        {
            "coherence": mu,
            "sparsity_bound": None if bound == float("inf") else bound,
            "certified_order": certified_order(mu, F.n),
            "frame_bounds": [a, b],
            "unit_inner_product": ok,
            "max_unit_defect": float(defects.max()),
        }
    )
    return EXIT_OK


def cmd_recover(args):
    F = frame_from_json(_load_json(args.frame))
    x = vector_from_json(_load_json(args.x))
    if args.solver == "oracle":
        rep = l0_oracle(F, x)
    else:
        rep = bp_admm(F, x, max_iters=args.max_iters)
    _emit(report_to_json(rep))
    return EXIT_OK if rep.status == CONVERGED else EXIT_NONCONVERGED


def _config(path):
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise InvalidInputError("config must be a JSON object")
    return ExperimentConfig.from_dict(obj)


def cmd_sweep(args):
    config = _config(args.config)
    records, summary = run_recovery_sweep(config)
    if not config.csv_path:
        sys.stdout.write(records_to_csv(records))
    if not config.summary_path:
        _emit(summary)
    return EXIT_OK


def cmd_nsp_check(args):
    _emit(run_nsp_consistency(_config(args.config), max_order=args.max_order))
    return EXIT_OK


def cmd_gen_frame(args):
    F = FRAME_FAMILIES[args.family](args.k, args.m, args.n, args.seed)
    _emit(frame_to_json(F))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hcsparse", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coherence", help="coherence, sparsity bound and frame bounds of a frame")
    p.add_argument("frame")
    p.add_argument("--unit-tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("recover", help="solve the l1 (bp) or l0 (oracle) recovery problem")
    p.add_argument("frame")
    p.add_argument("x")
    p.add_argument("--solver", choices=("bp", "oracle"), default="bp")
    p.add_argument("--max-iters", type=int, default=20000)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("sweep", help="plant-and-recover sweep from a JSON config")
    p.add_argument("config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("nsp-check", help="certificate versus falsifier consistency run")
    p.add_argument("config")
    p.add_argument("--max-order", type=int, default=None)
    p.set_defaults(func=cmd_nsp_check)

    p = sub.add_parser("gen-frame", help="print a random unit inner product frame as JSON")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--family", choices=sorted(FRAME_FAMILIES), default="haar")
    p.set_defaults(func=cmd_gen_frame)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InconsistencyError as exc:
        print(f"fatal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT


if __name__ == "__main__":
    sys.exit(main())
