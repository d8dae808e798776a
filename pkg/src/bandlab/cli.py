"""Command line interface: ``bandlab <subcommand> ...``.

Exit codes: 0 success, 1 runtime error (a JSON object describing it is
written to stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .errors import BandlabError
from .learners import fit_polynomial, fit_sinc_interpolant, model_from_dict, model_to_dict
from .riskbounds import (
    diagonal_bound,
    empirical_risk,
    expected_risk_mc,
    hypercube_bound,
    theorem2_bound,
)
from .sampling import Dataset, InputDistribution, cell_occupancy, make_dataset
from .targets import (
    synth_approx,
    synth_nonbandlimited,
    synth_strict,
    target_from_dict,
    target_to_dict,
)


def _scale_arg(text: str):
    if text in ("data", "distribution"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, 'data' or 'distribution', got {text!r}")


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if out:
        harness.write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _dist_from_args(args, K: int) -> InputDistribution:
    if args.dist == "bounded_uniform":
        return InputDistribution("bounded_uniform", K, U=args.U)
    sig = tuple(args.sigma) if args.sigma else (1.0,)
    if args.dist == "isotropic_gaussian":
        return InputDistribution("isotropic_gaussian", K, sigma=sig[:1])
    return InputDistribution("diagonal_gaussian", K, sigma=sig)


def _add_dist_args(p):
    p.add_argument("--dist", default="isotropic_gaussian",
                   choices=["isotropic_gaussian", "diagonal_gaussian", "bounded_uniform"])
    p.add_argument("--sigma", type=float, nargs="+", help="std (one value, or K values)")
    p.add_argument("--U", type=float, help="half-width of the uniform hypercube")


def cmd_synth(args):
    if args.kind == "strict":
        if args.B is None:
            raise SystemExit("synth: --B is required for strict targets")
        t = synth_strict(args.K, args.B, args.J, args.H, args.seed)
    elif args.kind == "approx":
        if args.s is None:
            raise SystemExit("synth: --s is required for approx targets")
        t = synth_approx(args.K, args.s, args.J, args.H, args.seed)
    else:
        t = synth_nonbandlimited(args.K, args.cell_resolution, args.seed)
    _emit(target_to_dict(t), args.out)


def cmd_sample(args):
    target = target_from_dict(harness.load_json(args.target))
    ds = make_dataset(target, _dist_from_args(args, target.K), args.N, args.seed)
    _emit(ds.to_dict(), args.out)


def cmd_fit(args):
    ds = Dataset.from_dict(harness.load_json(args.data))
    if args.learner == "poly":
        model = fit_polynomial(ds, degree=args.degree, degree_cap=args.degree_cap,
                               input_scale=args.input_scale, exact=args.exact)
    else:
        if args.band is None:
            raise SystemExit("fit: --band is required for the sinc learner")
        model = fit_sinc_interpolant(ds, args.band, args.ridge)
    _emit(model_to_dict(model), args.out)


def cmd_risk(args):
    model = model_from_dict(harness.load_json(args.model))
    out = {}
    if args.target:
        target = target_from_dict(harness.load_json(args.target))
        est = expected_risk_mc(model, target, _dist_from_args(args, target.K), args.M, args.seed)
        out["expected"] = est.to_dict()
    if args.data:
        out["empirical"] = empirical_risk(model, Dataset.from_dict(harness.load_json(args.data)))
    if not out:
        raise SystemExit("risk: give --target and/or --data")
    _emit(out, args.out)


def cmd_bound(args):
    if args.kind == "theorem2":
        rep = theorem2_bound(args.K, args.B, args.sigma, args.H, args.n)
    elif args.kind == "hypercube":
        rep = hypercube_bound(args.K, args.B, args.U, args.H, args.n)
    else:
        rep = diagonal_bound(args.K, args.Bk, args.sigmak, args.H, args.n)
    if args.json:
        _emit(rep.to_dict(), None)
    else:
        print(repr(rep.bound))


def cmd_coverage(args):
    if args.data:
        points = Dataset.from_dict(harness.load_json(args.data)).inputs
    else:
        import numpy as np

        points = np.asarray(args.points or [], dtype=float).reshape(-1, args.K)
    _emit(cell_occupancy(points, args.U, args.B).to_dict(), args.out)


def _run_config(fn):
    def cmd(args):
        cfg = harness.SweepConfig.load(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.timing:
            cfg.record_timing = True
        res = fn(cfg, threads=args.threads)
        out = args.out or cfg.out
        if out:
            out = Path(out)
            if not out.is_absolute() and not args.out:
                out = cfg.base_dir / out
            res.write(out)
            print(json.dumps({"csv": str(out), "summary": str(harness.summary_path(out))}))
        else:
            sys.stdout.write(res.csv_text)
    return cmd


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bandlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a target function")
    p.add_argument("--kind", default="strict", choices=["strict", "approx", "hash"])
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--B", type=float)
    p.add_argument("--s", type=float, help="spectral std for approx targets")
    p.add_argument("--J", type=int, default=8)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--cell-resolution", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="draw a dataset from a target file")
    p.add_argument("--target", required=True)
    _add_dist_args(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a learner to a dataset file")
    p.add_argument("--data", required=True)
    p.add_argument("--learner", default="poly", choices=["poly", "sinc"])
    p.add_argument("--degree", type=int)
    p.add_argument("--degree-cap", type=int, default=10)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--input-scale", type=_scale_arg)
    p.add_argument("--band", type=float)
    p.add_argument("--ridge", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("risk", help="expected (Monte Carlo) and empirical risk of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--target")
    p.add_argument("--data")
    _add_dist_args(p)
    p.add_argument("--M", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("bound", help="evaluate a closed-form risk bound")
    p.add_argument("--kind", default="theorem2", choices=["theorem2", "diagonal", "hypercube"])
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--B", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--U", type=float)
    p.add_argument("--Bk", type=float, nargs="+")
    p.add_argument("--sigmak", type=float, nargs="+")
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--json", action="store_true", help="print the full report")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("coverage", help="pi/B grid-cell occupancy of a point set")
    p.add_argument("--data")
    p.add_argument("--points", type=float, nargs="*")
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--U", type=float, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coverage)

    for name, fn, text in (("sweep", harness.run_sweep, "risk sweep over N"),
                           ("equiv", harness.run_equivalence, "distance between two learners"),
                           ("floor", harness.run_floor_demo, "risk floor on a noise target")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=harness.default_threads())
        p.add_argument("--timing", action="store_true", help="record wall_ms (not reproducible)")
        p.set_defaults(func=_run_config(fn))
    return ap


def _check_bound_args(ap, args):
    if args.command != "bound":
        return
    need = {"theorem2": ("B", "sigma"), "hypercube": ("B", "U"), "diagonal": ("Bk", "sigmak")}
    missing = [f"--{a}" for a in need[args.kind] if getattr(args, a) is None]
    if missing:
        ap.error(f"bound --kind {args.kind} requires {' '.join(missing)}")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    _check_bound_args(ap, args)
    try:
        args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            ap.error(exc.code)
        raise
    except (BandlabError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
