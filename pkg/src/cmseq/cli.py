"""Command-line interface.

Subcommands
-----------
generate    sample trajectories from a model file into CSV
covariance  assemble and export the covariance implied by a model file
classify    run the covariance classification battery on a covariance file
fit         recover a model file from a covariance file

Exit codes: 0 evaluation succeeded (classification verdicts do not affect
it), 1 unreadable/unparsable input, 2 structural validation failure
(shape or non-PSD, with the most negative eigenvalue reported), 3 operation
precondition failure (e.g. fitting a non-conditionally-Markov covariance
without --force).  The CMSEQ_TOL environment variable overrides the default
tolerance wherever --tol is not given.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io
from .characterize import (DEFAULT_REL_TOL, is_cm, is_interval_cm, is_markov,
                           is_reciprocal)
from .core import BlockCovariance, Direction
from .errors import (IndefiniteMatrixError, InputError, PreconditionError,
                     ValidationError)
from .fit import fit_cm
from .model import covariance_of, sample

EMPIRICAL_DEFAULT_TOL = 5e-2


def _window(text):
    try:
        k1, k2 = text.split(":")
        return int(k1), int(k2)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"window must look like k1:k2, got {text!r}") from None


def _resolve_tol(args, default=DEFAULT_REL_TOL):
    if args.tol is not None:
        return args.tol
    env = os.environ.get("CMSEQ_TOL")
    if env is not None:
        try:
            return float(env)
        except ValueError:
            raise InputError(f"CMSEQ_TOL is not a number: {env!r}") from None
    return default


def cmd_generate(args):
    model = io.load_model(args.model)
    ensemble = sample(model, args.count, args.seed)
    io.save_trajectories(args.out, ensemble)
    print(f"wrote {ensemble.count} paths x {ensemble.n + 1} times "
          f"(d={ensemble.d}, seed={ensemble.seed}, model {ensemble.model_hash}) "
          f"to {args.out}")
    return 0


def cmd_covariance(args):
    model = io.load_model(args.model)
    cov = covariance_of(model)
    io.save_covariance(args.out, cov)
    print(f"wrote {(cov.n + 1) * cov.d}x{(cov.n + 1) * cov.d} covariance "
          f"(N={cov.n}, d={cov.d}) to {args.out}")
    return 0


def _load_classify_input(args):
    if args.empirical:
        paths = io.load_trajectories(args.cov)
        count = paths.shape[0]
        x = paths.reshape(count, -1)
        return BlockCovariance(x.T @ x / count, d=paths.shape[2]), count
    return io.load_covariance(args.cov), None


def cmd_classify(args):
    tol_default = EMPIRICAL_DEFAULT_TOL if args.empirical else DEFAULT_REL_TOL
    tol = _resolve_tol(args, tol_default)
    cov, count = _load_classify_input(args)
    if count is not None:
        print(f"empirical covariance from {count} paths "
              f"(N={cov.n}, d={cov.d}, tol={tol:g})")
    reports = [
        is_markov(cov, tol),
        is_reciprocal(cov, tol),
        is_cm(cov, Direction.FIRST, tol),
        is_cm(cov, Direction.LAST, tol),
    ]
    directions = ([Direction(args.direction)] if args.direction
                  else [Direction.FIRST, Direction.LAST])
    for k1, k2 in args.windows or []:
        for direction in directions:
            reports.append(is_interval_cm(cov, k1, k2, direction, tol))
    for rep in reports:
        print(rep.summary())
    if args.out:
        payload = {
            "tol": tol,
            "n": cov.n,
            "d": cov.d,
            "verdicts": {
                rep.name: {
                    "passed": rep.passed,
                    "worst_residual": rep.worst_residual,
                    "worst_indices": list(rep.worst_indices)
                    if rep.worst_indices is not None else None,
                    "threshold": rep.threshold,
                }
                for rep in reports
            },
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(io.canonical_json(payload))
    return 0


def cmd_fit(args):
    tol = _resolve_tol(args)
    cov = io.load_covariance(args.cov)
    model = fit_cm(cov, Direction(args.direction), enforce=not args.force,
                   rel_tol=tol)
    io.save_model(args.out, model)
    err = float(np.linalg.norm(covariance_of(model).matrix - cov.matrix))
    rel = err / cov.scale if cov.scale else err
    print(f"wrote model (N={model.n}, d={model.d}, c={model.direction.value}) "
          f"to {args.out}; reproduction error {rel:.3e} relative")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cmseq",
        description="Endpoint-conditioned Gaussian sequences: generate, "
                    "classify, fit, export.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="sample trajectories from a model")
    gen.add_argument("--model", required=True, help="model JSON file")
    gen.add_argument("--count", type=int, default=1, help="number of paths")
    gen.add_argument("--seed", type=int, default=0, help="RNG seed")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.set_defaults(func=cmd_generate)

    cov = sub.add_parser("covariance", help="export a model's covariance")
    cov.add_argument("--model", required=True, help="model JSON file")
    cov.add_argument("--out", required=True, help="output covariance JSON path")
    cov.set_defaults(func=cmd_covariance)

    cls = sub.add_parser("classify", help="classify a covariance file")
    cls.add_argument("--cov", required=True,
                     help="covariance JSON file (or trajectory CSV with --empirical)")
    cls.add_argument("--tol", type=float, default=None, help="residual tolerance")
    cls.add_argument("--direction", choices=["first", "last"], default=None,
                     help="restrict window checks to one direction")
    cls.add_argument("--windows", type=_window, action="append", metavar="K1:K2",
                     help="also check the window [k1,k2]; repeatable")
    cls.add_argument("--empirical",
                     action="store_true",
                     help="input is a trajectory CSV; classify its sample "
                          "covariance at a heuristic tolerance")
    cls.add_argument("--out", default=None, help="optional JSON report path")
    cls.set_defaults(func=cmd_classify)

    fit = sub.add_parser("fit", help="fit a model to a covariance file")
    fit.add_argument("--cov", required=True, help="covariance JSON file")
    fit.add_argument("--direction", choices=["first", "last"], required=True)
    fit.add_argument("--out", required=True, help="output model JSON path")
    fit.add_argument("--tol", type=float, default=None, help="residual tolerance")
    fit.add_argument("--force", action="store_true",
                     help="skip the conditionally-Markov precondition check")
    fit.set_defaults(func=cmd_fit)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IndefiniteMatrixError as exc:
        print(f"validation error: {exc} "
              f"(most negative eigenvalue {exc.min_eigenvalue:.6e})",
              file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
