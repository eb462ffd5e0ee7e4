"""Command-line entry point: ``beamlab {simulate,detect,threshold,certify,reproduce}``.

Exit codes: 0 success, 2 configuration error, 3 solver failure or resource
limit, 4 no prevailing mode. On failure a JSON error document is printed to
stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .certificates import dumps17
from .config import ExperimentConfig
from .errors import ConfigError, IntegrationError, NoPrevailingModeError, ResourceLimitError
from .experiments import TARGETS, run_certify, run_detect, run_reproduce, run_simulate, run_threshold

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_NO_PREVAILING = 4


def _modes(text):
    try:
        return [int(m) for m in text.split(",") if m.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="beamlab", description="Galerkin beam simulations and stability certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        if config_required:
            p.add_argument("--config", required=True, help="experiment JSON file")
        p.add_argument("--out", help="output directory (defaults to the config's output.dir)")
        p.add_argument("--tol", type=float, help="override rtol and atol")
        p.add_argument("--sample-dt", type=float, help="override the dense sampling step")
        return p

    common(sub.add_parser("simulate", help="integrate and write trajectory/energy CSV"))
    common(sub.add_parser("detect", help="classify the trajectory as Stable/Unstable/Indeterminate"))
    common(sub.add_parser("threshold", help="bisect on the prevailing amplitude"))
    common(sub.add_parser("certify", help="lift the verdict with the truncation-error certificate"))
    rep = common(sub.add_parser("reproduce", help="rerun a reference experiment"), config_required=False)
    rep.add_argument("target", choices=TARGETS)
    rep.add_argument("--modes", type=_modes, help="prevailing modes for table2, e.g. 2 or 1,2,3")
    rep.add_argument("--workers", type=int, default=1, help="process-pool size for sub-runs")
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("--tol must be positive")
        changes.update(rtol=args.tol, atol=args.tol)
    if args.sample_dt is not None:
        if not args.sample_dt > 0:
            raise ConfigError("--sample-dt must be positive")
        changes["dt_sample"] = args.sample_dt
    return cfg.replace(**changes) if changes else cfg


def _dispatch(args):
    if args.command == "reproduce":
        report = run_reproduce(
            args.target, args.out, modes=args.modes, tol=args.tol, dt_sample=args.sample_dt, workers=args.workers
        )
        return {"target": args.target, "out": args.out, "report": report}

    cfg = _apply_overrides(ExperimentConfig.load(args.config), args)
    out = args.out or cfg.out
    if args.command == "simulate":
        traj = run_simulate(cfg, out)
        return {"samples": int(traj.t.size), "T": traj.T, "out": out}
    if args.command == "detect":
        return run_detect(cfg, out).to_dict()
    if args.command == "threshold":
        return run_threshold(cfg, out).to_dict()
    return run_certify(cfg, out).to_dict()


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        summary = _dispatch(args)
    except (ConfigError, ValueError) as exc:
        code, exc_ = EXIT_CONFIG, exc
    except (IntegrationError, ResourceLimitError) as exc:
        code, exc_ = EXIT_SOLVER, exc
    except NoPrevailingModeError as exc:
        code, exc_ = EXIT_NO_PREVAILING, exc
    else:
        print(dumps17(summary))
        return EXIT_OK
    print(json.dumps({"error": type(exc_).__name__, "message": str(exc_), "exit_code": code}), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
