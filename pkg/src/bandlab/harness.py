"""Seeded experiment sweeps with CSV and JSON output.

Trial ``t`` draws its training set from ``trial_seed(seed, t)`` for every
``N`` in the sweep, so the datasets of one trial are nested prefixes of each
other. Jobs may run on a thread pool; results are collected in job order and
every reduction is exactly rounded, so the output bytes do not depend on the
thread count. Wall time is only written when ``record_timing`` is on, because
it is the one column that cannot be reproducible.
"""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BandlabError, InputError
from .indexcalc import degree_for_sample_count
from .learners import LearnerSpec, fit_learner, model_size_label, ZeroModel
from .riskbounds import (
    approx_band_bound,
    diagonal_bound,
    difficulty,
    empirical_risk,
    expected_risk_mc,
    hypercube_bound,
    model_distance_mc,
    theorem2_bound,
    trial_seed,
)
from .sampling import InputDistribution, make_dataset
from .targets import (
    CosineMixtureTarget,
    HashNoiseTarget,
    per_dim_bands,
    synth_approx,
    synth_nonbandlimited,
    synth_strict,
    target_from_dict,
)

SCHEMA_VERSION = 1
SWEEP_HEADER = ("trial,N,degree,seed,emp_risk,exp_risk,exp_risk_se,bound_t2,bound_cube,"
                "difficulty,degenerate,wall_ms")
EQUIV_HEADER = ("trial,N,seed,emp_risk_a,emp_risk_b,distance,distance_se,degenerate_a,"
                "degenerate_b,wall_ms")
FLOOR_HEADER = "trial,N,learner,seed,emp_risk,exp_risk,exp_risk_se,degenerate,wall_ms"
THREADS_ENV = "BANDLAB_THREADS"


def fmt(v) -> str:
    """CSV token: shortest round-trip repr for floats, ``inf``/``nan`` literally."""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename over `path`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def build_target(spec: dict, base_dir: Path | None = None):
    """Target from an inline synthesis recipe, a file reference or a full record."""
    if "file" in spec:
        p = Path(spec["file"])
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        return target_from_dict(load_json(p))
    if "synth" in spec:
        kind = spec["synth"]
        try:
            if kind == "strict":
                return synth_strict(int(spec["K"]), float(spec["B"]), int(spec.get("J", 8)),
                                    float(spec.get("H", 1.0)), int(spec.get("seed", 0)))
            if kind == "approx":
                return synth_approx(int(spec["K"]), float(spec["s"]), int(spec.get("J", 8)),
                                    float(spec.get("H", 1.0)), int(spec.get("seed", 0)))
            if kind == "hash":
                return synth_nonbandlimited(int(spec["K"]),
                                            float(spec.get("cell_resolution", 1e-3)),
                                            int(spec.get("seed", 0)))
        except KeyError as exc:
            raise InputError(f"target recipe lacks {exc}") from exc
        raise InputError(f"unknown target recipe {kind!r}")
    return target_from_dict(spec)


@dataclass
class SweepConfig:
    target: dict
    distribution: dict
    learner: LearnerSpec = field(default_factory=LearnerSpec)
    N_list: list[int] = field(default_factory=lambda: [4, 8, 16, 32])
    trials: int = 20
    eval_points: int = 20000
    seed: int = 0
    out: str | None = None
    learner_b: LearnerSpec | None = None
    learners: list[LearnerSpec] | None = None
    record_timing: bool = False
    base_dir: Path | None = field(default=None, repr=False)

    def __post_init__(self):
        if isinstance(self.learner, dict):
            self.learner = LearnerSpec.from_dict(self.learner)
        if isinstance(self.learner_b, dict):
            self.learner_b = LearnerSpec.from_dict(self.learner_b)
        if self.learners is not None:
            self.learners = [LearnerSpec.from_dict(s) if isinstance(s, dict) else s
                             for s in self.learners]
        self.N_list = [int(n) for n in self.N_list]
        if not self.N_list:
            raise InputError("N_list must be nonempty")
        if any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            raise InputError(f"N_list must be strictly ascending, got {self.N_list}")
        if self.N_list[0] < 1:
            raise InputError("every N must be >= 1")
        if self.trials < 1:
            raise InputError(f"trials must be >= 1, got {self.trials}")
        if self.eval_points < 100:
            raise InputError(f"eval_points must be >= 100, got {self.eval_points}")

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "SweepConfig":
        known = set(cls.__dataclass_fields__) - {"base_dir"}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config fields {sorted(unknown)}")
        try:
            return cls(**d, base_dir=base_dir)
        except TypeError as exc:
            raise InputError(f"bad config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "SweepConfig":
        return cls.from_dict(load_json(path), Path(path).resolve().parent)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "distribution": self.distribution,
            "learner": self.learner.to_dict(),
            "learner_b": None if self.learner_b is None else self.learner_b.to_dict(),
            "learners": None if self.learners is None else [s.to_dict() for s in self.learners],
            "N_list": self.N_list,
            "trials": self.trials,
            "eval_points": self.eval_points,
            "seed": self.seed,
            "record_timing": self.record_timing,
        }

    def resolve(self):
        target = build_target(self.target, self.base_dir)
        dist = InputDistribution.from_dict(self.distribution)
        if target.K != dist.K:
            raise InputError(f"target dimension {target.K} != distribution dimension {dist.K}")
        return target, dist


@dataclass
class TrialRecord:
    trial: int
    N: int
    degree: float
    seed: int
    emp_risk: float
    exp_risk: float
    exp_risk_se: float
    bound_t2: float
    bound_cube: float
    difficulty: float
    degenerate: bool
    wall_ms: float

    def csv_row(self) -> str:
        return ",".join(fmt(getattr(self, k)) for k in SWEEP_HEADER.split(","))


@dataclass
class RunResult:
    rows: list
    summary: dict
    csv_text: str

    def write(self, out) -> None:
        out = Path(out)
        write_atomic(out, self.csv_text)
        write_atomic(summary_path(out), json.dumps(self.summary, indent=2, sort_keys=True) + "\n")


def summary_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".summary.json")


def _csv(header: str, lines) -> str:
    buf = io.StringIO()
    buf.write(header + "\n")
    for line in lines:
        buf.write(line + "\n")
    return buf.getvalue()


def _map(fn, jobs, threads: int):
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, jobs))
    return [fn(j) for j in jobs]


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
    return v


def _median(values):
    vals = [v for v in values if not math.isnan(v)]
    return float(np.median(vals)) if vals else math.nan


def _mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return math.fsum(vals) / len(vals) if vals else math.nan


def bounds_for(target, dist: InputDistribution, n: int):
    """``(bound_t2, bound_cube, difficulty)`` for one sweep cell; nan when not applicable."""
    nan = math.nan
    if not isinstance(target, CosineMixtureTarget):
        return nan, nan, nan
    K, H = target.K, target.h_bound
    if dist.kind == "bounded_uniform":
        if not target.is_strict:
            return nan, nan, nan
        B = target.declared_band
        return nan, hypercube_bound(K, B, dist.U, H, n).bound, difficulty(K, B, dist.U)
    if not target.is_strict:
        res = approx_band_bound(target, K, dist.scale, H, n)
        return res.bound, nan, difficulty(K, res.B_star, dist.scale)
    B = target.declared_band
    if dist.kind == "diagonal_gaussian":
        b = diagonal_bound(K, per_dim_bands(target), dist.sigma, H, n).bound
        return b, nan, difficulty(K, B, dist.scale)
    return theorem2_bound(K, B, dist.sigma[0], H, n).bound, nan, difficulty(K, B, dist.sigma[0])


def _bound_degree(model, spec: LearnerSpec, N: int, K: int) -> int:
    if spec.kind == "poly" and hasattr(model, "degree"):
        return int(model.degree)
    return degree_for_sample_count(N, K, spec.degree_cap)


def run_sweep(config: SweepConfig, threads: int = 1) -> RunResult:
    """One CSV row per ``(N, trial)`` plus per-N summary statistics."""
    target, dist = config.resolve()
    spec = config.learner
    jobs = [(N, t) for N in config.N_list for t in range(config.trials)]

    def run(job):
        N, t = job
        s = trial_seed(config.seed, t)
        t0 = time.perf_counter()
        ds = make_dataset(target, dist, N, s)
        try:
            model = fit_learner(spec, ds, target)
        except BandlabError:
            model = None
        if model is None:
            n = degree_for_sample_count(N, target.K, spec.degree_cap)
            emp = exp = se = math.nan
            size, degenerate = math.nan, True
        else:
            n = _bound_degree(model, spec, N, target.K)
            emp = empirical_risk(model, ds)
            est = expected_risk_mc(model, target, dist, config.eval_points, s)
            exp, se = est.mean, est.std_error
            size, degenerate = model_size_label(model), bool(getattr(model, "degenerate", False))
        b2, bc, diff = bounds_for(target, dist, n)
        wall = (time.perf_counter() - t0) * 1e3 if config.record_timing else math.nan
        return TrialRecord(t, N, size, s, emp, exp, se, b2, bc, diff, degenerate, wall)

    rows = _map(run, jobs, threads)
    per_N = []
    for N in config.N_list:
        rs = [r for r in rows if r.N == N]
        ok = [r for r in rs if not math.isnan(r.exp_risk)]
        bound = rs[0].bound_t2 if not math.isnan(rs[0].bound_t2) else rs[0].bound_cube
        below = [r.exp_risk <= bound for r in ok] if not math.isnan(bound) else []
        per_N.append({
            "N": N,
            "degree": _jsonable(rs[0].degree),
            "median_exp_risk": _jsonable(_median([r.exp_risk for r in rs])),
            "mean_exp_risk": _jsonable(_mean([r.exp_risk for r in rs])),
            "median_emp_risk": _jsonable(_median([r.emp_risk for r in rs])),
            "bound_t2": _jsonable(rs[0].bound_t2),
            "bound_cube": _jsonable(rs[0].bound_cube),
            "difficulty": _jsonable(rs[0].difficulty),
            "fraction_below_bound": _jsonable(sum(below) / len(below) if below else math.nan),
            "n_failed": len(rs) - len(ok),
            "n_degenerate": sum(r.degenerate for r in rs),
        })
    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "target_id": target.id,
        "config": config.to_dict(),
        "csv_header": SWEEP_HEADER,
        "per_N": per_N,
    }
    return RunResult(rows, summary, _csv(SWEEP_HEADER, (r.csv_row() for r in rows)))


@dataclass
class EquivalenceRecord:
    trial: int
    N: int
    seed: int
    emp_risk_a: float
    emp_risk_b: float
    distance: float
    distance_se: float
    degenerate_a: bool
    degenerate_b: bool
    wall_ms: float

    def csv_row(self) -> str:
        return ",".join(fmt(getattr(self, k)) for k in EQUIV_HEADER.split(","))


def run_equivalence(config: SweepConfig, threads: int = 1) -> RunResult:
    """Fit two learners on shared datasets and measure their L2(p) distance."""
    if config.learner_b is None:
        raise InputError("equivalence run needs 'learner_b' in the config")
    target, dist = config.resolve()
    jobs = [(N, t) for N in config.N_list for t in range(config.trials)]

    def run(job):
        N, t = job
        s = trial_seed(config.seed, t)
        t0 = time.perf_counter()
        ds = make_dataset(target, dist, N, s)
        try:
            a = fit_learner(config.learner, ds, target)
            b = fit_learner(config.learner_b, ds, target)
        except BandlabError:
            nan = math.nan
            return EquivalenceRecord(t, N, s, nan, nan, nan, nan, True, True, nan)
        d = model_distance_mc(a, b, dist, config.eval_points, s)
        wall = (time.perf_counter() - t0) * 1e3 if config.record_timing else math.nan
        return EquivalenceRecord(t, N, s, empirical_risk(a, ds), empirical_risk(b, ds),
                                 d.mean, d.std_error, bool(getattr(a, "degenerate", False)),
                                 bool(getattr(b, "degenerate", False)), wall)

    rows = _map(run, jobs, threads)
    per_N = []
    for N in config.N_list:
        rs = [r for r in rows if r.N == N]
        per_N.append({
            "N": N,
            "median_distance": _jsonable(_median([r.distance for r in rs])),
            "mean_distance": _jsonable(_mean([r.distance for r in rs])),
            "median_emp_risk_a": _jsonable(_median([r.emp_risk_a for r in rs])),
            "median_emp_risk_b": _jsonable(_median([r.emp_risk_b for r in rs])),
        })
    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": "equivalence",
        "target_id": target.id,
        "config": config.to_dict(),
        "csv_header": EQUIV_HEADER,
        "per_N": per_N,
    }
    return RunResult(rows, summary, _csv(EQUIV_HEADER, (r.csv_row() for r in rows)))


@dataclass
class FloorRecord:
    trial: int
    N: int
    learner: str
    seed: int
    emp_risk: float
    exp_risk: float
    exp_risk_se: float
    degenerate: bool
    wall_ms: float

    def csv_row(self) -> str:
        vals = []
        for k in FLOOR_HEADER.split(","):
            v = getattr(self, k)
            vals.append(v if isinstance(v, str) else fmt(v))
        return ",".join(vals)


DEFAULT_FLOOR_LEARNERS = (LearnerSpec("poly"), LearnerSpec("sinc", band="auto", ridge=0.0))


def run_floor_demo(config: SweepConfig, threads: int = 1) -> RunResult:
    """Expected risk of interpolating learners on a non-bandlimited target.

    The first row (``N = 0``, learner ``zero``) is the zero-model baseline,
    whose risk is the target's variance under ``p``.
    """
    target, dist = config.resolve()
    if not isinstance(target, HashNoiseTarget):
        raise InputError("the floor demo needs a hash-noise target")
    specs = list(config.learners or DEFAULT_FLOOR_LEARNERS)
    base = expected_risk_mc(ZeroModel(target.K), target, dist, config.eval_points, config.seed)
    baseline = FloorRecord(-1, 0, "zero", config.seed, math.nan, base.mean, base.std_error,
                           False, math.nan)
    jobs = [(N, t, i) for N in config.N_list for t in range(config.trials)
            for i in range(len(specs))]

    def run(job):
        N, t, i = job
        spec = specs[i]
        s = trial_seed(config.seed, t)
        t0 = time.perf_counter()
        ds = make_dataset(target, dist, N, s)
        label = spec.kind
        try:
            model = fit_learner(spec, ds, target)
        except BandlabError:
            nan = math.nan
            return FloorRecord(t, N, label, s, nan, nan, nan, True, nan)
        est = expected_risk_mc(model, target, dist, config.eval_points, s)
        wall = (time.perf_counter() - t0) * 1e3 if config.record_timing else math.nan
        return FloorRecord(t, N, label, s, empirical_risk(model, ds), est.mean, est.std_error,
                           bool(getattr(model, "degenerate", False)), wall)

    rows = [baseline] + _map(run, jobs, threads)
    cells = []
    for N in config.N_list:
        for spec in specs:
            rs = [r for r in rows if r.N == N and r.learner == spec.kind]
            cells.append({
                "N": N,
                "learner": spec.kind,
                "min_exp_risk": _jsonable(min((r.exp_risk for r in rs), default=math.nan)),
                "median_exp_risk": _jsonable(_median([r.exp_risk for r in rs])),
                "max_emp_risk": _jsonable(max((r.emp_risk for r in rs), default=math.nan)),
            })
    summary = {
        "schema_version": SCHEMA_VERSION,
        "kind": "floor",
        "target_id": target.id,
        "config": config.to_dict(),
        "csv_header": FLOOR_HEADER,
        "baseline": base.to_dict(),
        "analytic_floor": 1.0 / 3.0,
        "cells": cells,
    }
    return RunResult(rows, summary, _csv(FLOOR_HEADER, (r.csv_row() for r in rows)))
