"""Risk functionals, closed-form risk bounds and model distances.

Every bound is computed in log space first; the linear value is ``inf``
when it would overflow a double. Monte Carlo estimates draw evaluation
points from the ``"eval"`` stream namespace, so they never reuse the
training points produced from the same seed.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .errors import BandlabError, InputError
from .indexcalc import log_factorial
from .learners import LearnerSpec, fit_learner
from .sampling import Dataset, InputDistribution, draw_inputs, make_dataset
from .targets import CosineMixtureTarget, out_of_band_energy

MC_CHUNK = 8192
_LOG_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class RiskEstimate:
    mean: float
    std_error: float
    n_eval: int
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n_eval": self.n_eval,
                "seed": self.seed}


@dataclass(frozen=True)
class BoundReport:
    bound: float
    log_bound: float
    n: int
    kind: str
    inputs: dict
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and not math.isfinite(v):
                return "inf" if v > 0 else ("-inf" if v < 0 else "nan")
            return v

        return {
            "kind": self.kind,
            "bound": enc(self.bound),
            "log_bound": enc(self.log_bound),
            "n": self.n,
            "inputs": {k: ([enc(x) for x in v] if isinstance(v, list) else enc(v))
                       for k, v in self.inputs.items()},
            "flags": list(self.flags),
        }


def _exp_or_inf(log_value: float) -> float:
    if log_value > _LOG_MAX:
        return math.inf
    return math.exp(log_value)


def _check_K(K):
    if int(K) != K or K < 1:
        raise InputError(f"K must be a positive integer, got {K!r}")


def _check_n(n):
    if int(n) != n or n < 0:
        raise InputError(f"n must be a nonnegative integer, got {n!r}")


def _positive(**kw):
    for name, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise InputError(f"{name} must be a finite positive number, got {v!r}")


# -- risk functionals --------------------------------------------------------


def empirical_risk(model, dataset: Dataset) -> float:
    """Mean squared training error; 0 (with a RuntimeWarning) for N=0."""
    if getattr(model, "K", dataset.K) != dataset.K:
        raise InputError(f"model dimension {model.K} != data dimension {dataset.K}")
    if dataset.N == 0:
        warnings.warn("empirical risk of an empty dataset is reported as 0", RuntimeWarning)
        return 0.0
    r = dataset.outputs - model(dataset.inputs)
    return math.fsum(r * r) / dataset.N


def _mc_squared_diff(f, g, dist: InputDistribution, M: int, seed: int) -> RiskEstimate:
    if M < 1:
        raise InputError(f"M must be >= 1, got {M}")
    for h in (f, g):
        if getattr(h, "K", dist.K) != dist.K:
            raise InputError(f"dimension {h.K} does not match distribution {dist.K}")
    # fixed chunking plus exactly rounded sums: result is independent of schedule
    parts = []
    for start in range(0, M, MC_CHUNK):
        X = draw_inputs(dist, min(MC_CHUNK, M - start), seed, "eval", start)
        d = f(X) - g(X)
        parts.append(d * d)
    sq = np.concatenate(parts)
    mean = math.fsum(sq) / M
    if M > 1:
        dev = sq - mean
        se = math.sqrt(math.fsum(dev * dev) / (M - 1) / M)
    else:
        se = math.inf
    return RiskEstimate(mean, se, M, seed)


def expected_risk_mc(model, target, dist: InputDistribution, M: int, seed: int) -> RiskEstimate:
    """Monte Carlo estimate of ``E_p[(f(x) - model(x))**2]``."""
    return _mc_squared_diff(target, model, dist, M, seed)


def model_distance_mc(model_a, model_b, dist: InputDistribution, M: int, seed: int) -> RiskEstimate:
    """Monte Carlo estimate of ``E_p[(a(x) - b(x))**2]``."""
    return _mc_squared_diff(model_a, model_b, dist, M, seed)


@dataclass
class TrialRisk:
    trial: int
    seed: int
    expected: RiskEstimate | None
    empirical: float
    model: object = field(repr=False, default=None)
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass
class MeanRisk:
    mean: float
    median: float
    trials: list[TrialRisk]

    @property
    def n_failed(self) -> int:
        return sum(t.failed for t in self.trials)


def trial_seed(seed: int, t: int) -> int:
    return streams.derive_seed(seed, streams.NAMESPACES["trial"], t)


def mean_expected_risk(target, dist: InputDistribution, learner: LearnerSpec, N: int, T: int,
                       M: int, seed: int, threads: int = 1) -> MeanRisk:
    """Average expected risk over `T` independent training sets of size `N`.

    Trial ``t`` uses the seed ``trial_seed(seed, t)`` both for its training
    stream and for its evaluation stream. Failed fits are recorded on the
    trial and excluded from the mean and median.
    """
    if T < 1:
        raise InputError(f"T must be >= 1, got {T}")

    def run(t):
        s = trial_seed(seed, t)
        ds = make_dataset(target, dist, N, s)
        try:
            model = fit_learner(learner, ds, target)
        except BandlabError as exc:
            return TrialRisk(t, s, None, math.nan, None, str(exc))
        return TrialRisk(t, s, expected_risk_mc(model, target, dist, M, s),
                         empirical_risk(model, ds), model)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            trials = list(ex.map(run, range(T)))
    else:
        trials = [run(t) for t in range(T)]
    ok = [t.expected.mean for t in trials if not t.failed]
    mean = math.fsum(ok) / len(ok) if ok else math.nan
    median = float(np.median(ok)) if ok else math.nan
    return MeanRisk(mean, median, trials)


# -- bounds -----------------------------------------------------------------


def log_theorem2_term(K: int, B: float, sigma: float, H: float, n: int) -> float:
    """``log[(sqrt(2) K B sigma)**(n+1) H / sqrt((n+1)!)]**2``; -inf if B*sigma=0."""
    if B == 0 or sigma == 0:
        return -math.inf
    base = 0.5 * math.log(2.0) + math.log(K) + math.log(B) + math.log(sigma)
    return 2.0 * ((n + 1) * base + math.log(H)) - log_factorial(n + 1)


def theorem2_bound(K: int, B: float, sigma: float, H: float, n: int) -> BoundReport:
    """Risk bound for an isotropic Gaussian input and a target of band `B`.

    ``[(sqrt(2) K B sigma)**(n+1) * H / sqrt((n+1)!)]**2``
    """
    _check_K(K)
    _check_n(n)
    _positive(B=B, sigma=sigma, H=H)
    lb = log_theorem2_term(K, B, sigma, H, n)
    return BoundReport(_exp_or_inf(lb), lb, int(n), "theorem2",
                       {"K": K, "B": B, "sigma": sigma, "H": H})


def diagonal_bound(K: int, B_k, sigma_k, H: float, n: int) -> BoundReport:
    """Average over axes of the per-axis Gaussian terms (diagonal covariance)."""
    _check_K(K)
    _check_n(n)
    _positive(H=H)
    B_k = [float(b) for b in B_k]
    sigma_k = [float(s) for s in sigma_k]
    if not (len(B_k) == len(sigma_k) == K):
        raise InputError(f"need {K} bands and {K} sigmas, got {len(B_k)} and {len(sigma_k)}")
    if any(b < 0 or not math.isfinite(b) for b in B_k) or any(
            s <= 0 or not math.isfinite(s) for s in sigma_k):
        raise InputError("bands must be finite and >= 0, sigmas finite and > 0")
    logs = [log_theorem2_term(K, b, s, H, n) for b, s in zip(B_k, sigma_k)]
    top = max(logs)
    if top == -math.inf:
        lb = -math.inf
    else:
        total = math.fsum(math.exp(v - top) for v in logs)
        lb = top + math.log(total / K)
    return BoundReport(_exp_or_inf(lb), lb, int(n), "diagonal",
                       {"K": K, "B_k": B_k, "sigma_k": sigma_k, "H": H})


def hypercube_bound(K: int, B: float, U: float, H: float, n: int) -> BoundReport:
    """Risk bound for any input law on ``[-U, U]**K``: ``[(K B U)**(n+1) H / (n+1)!]**2``."""
    _check_K(K)
    _check_n(n)
    _positive(B=B, U=U, H=H)
    lb = 2.0 * ((n + 1) * (math.log(K) + math.log(B) + math.log(U)) + math.log(H)
                - log_factorial(n + 1))
    return BoundReport(_exp_or_inf(lb), lb, int(n), "hypercube",
                       {"K": K, "B": B, "U": U, "H": H})


@dataclass(frozen=True)
class ApproxBandResult:
    epsilon_star: float
    B_star: float
    bound: float
    grid: np.ndarray
    objective: np.ndarray
    flags: tuple[str, ...] = ("units_assumed_compatible",)

    def to_dict(self) -> dict:
        return {"epsilon_star": self.epsilon_star, "B_star": self.B_star, "bound": self.bound,
                "grid": self.grid.tolist(), "objective": self.objective.tolist(),
                "flags": list(self.flags)}


def approx_band_bound(target: CosineMixtureTarget, K: int, sigma: float, H: float,
                      n: int) -> ApproxBandResult:
    """Minimize ``theorem2_bound(B) + eps(B)**2`` over the component norms.

    Between consecutive component norms the tail energy is constant and the
    truncation term grows with ``B``, so the minimum over all bands is
    attained at one of the norms and the grid search is exact. The sum adds
    a spectral energy to a squared risk as is; the result carries the
    ``units_assumed_compatible`` flag to say so.
    """
    if target.J == 0:
        raise InputError("target has no components")
    _check_K(K)
    _check_n(n)
    _positive(sigma=sigma, H=H)
    grid = np.unique(target.norms)
    obj = np.empty(grid.size)
    for i, B in enumerate(grid):
        trunc = _exp_or_inf(log_theorem2_term(K, float(B), sigma, H, n))
        obj[i] = trunc + out_of_band_energy(target, float(B))
    best = int(np.argmin(obj))
    B_star = float(grid[best])
    eps_star = math.sqrt(out_of_band_energy(target, B_star))
    return ApproxBandResult(eps_star, B_star, float(obj[best]), grid, obj)


def difficulty(K: int, B: float, sigma: float) -> float:
    """The task difficulty ``K * B * sigma``."""
    return K * B * sigma
