"""Interpolating learners.

Two constructions are provided:

``PolynomialModel``
    A multivariate polynomial in the graded-lex monomial basis of the scaled
    variable ``t = (x - center) / input_scale``. It is fitted by least squares
    with a column-pivoted QR factorization. When the number of monomials
    equals the number of samples the fit interpolates the data exactly.

``SincKernelModel``
    ``f(x) = sum_i w_i prod_k sinc(B' (x_k - node_ik))`` with
    ``sinc(t) = sin(t)/t``. Each term is bandlimited by ``B'`` per axis, so
    the model is bandlimited by ``B' * sqrt(K)`` in Euclidean norm. The
    weights solve ``(G + ridge I) w = y`` on the Gram matrix of the nodes.
    Random scattered nodes have no closed-form cardinal functions, so the
    cardinal-series interpolant is realized through this kernel system. It
    still reproduces every training value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConditioningError, InputError
from .indexcalc import (
    count_monomials,
    degree_for_sample_count,
    enumerate_multi_indices,
    monomial_matrix,
    multi_factorial,
    order,
)
from .sampling import Dataset
from .targets import BernsteinReport, as_points

SCHEMA_VERSION = 1
DEFAULT_DEGREE_CAP = 10
DEFAULT_RIDGE = 1e-10
MAX_RIDGE = 1e-4
INTERP_RTOL = 1e-8
_EVAL_CHUNK = 4096


def _finish(values, single):
    return float(values[0]) if single else values


def _json_num(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))


def _from_json_num(v) -> float:
    return float(v)


@dataclass(frozen=True, eq=False)
class PolynomialModel:
    K: int
    degree: int
    coefficients: np.ndarray
    center: np.ndarray
    input_scale: float = 1.0
    condition_estimate: float = 1.0
    residual_norm: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        x0 = np.asarray(self.center, dtype=float).reshape(-1)
        if c.size != count_monomials(self.K, self.degree):
            raise InputError(f"{c.size} coefficients for K={self.K}, degree={self.degree}")
        if x0.size != self.K:
            raise InputError(f"center has dimension {x0.size}, expected {self.K}")
        if not self.input_scale > 0:
            raise InputError(f"input_scale must be > 0, got {self.input_scale}")
        c.setflags(write=False)
        x0.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "center", x0)

    @property
    def indices(self):
        return enumerate_multi_indices(self.K, self.degree)

    def raw_coefficients(self) -> np.ndarray:
        """Coefficients of ``(x - center)**alpha`` (input scaling undone)."""
        d = np.array([order(a) for a in self.indices])
        return self.coefficients / self.input_scale ** d

    def __call__(self, x):
        X, single = as_points(x, self.K)
        idx = self.indices
        y = np.empty(X.shape[0])
        for s in range(0, X.shape[0], _EVAL_CHUNK):
            T = (X[s : s + _EVAL_CHUNK] - self.center) / self.input_scale
            V = monomial_matrix(T, idx)
            acc = np.zeros(T.shape[0])
            for j in range(len(idx)):
                acc += self.coefficients[j] * V[:, j]
            y[s : s + _EVAL_CHUNK] = acc
        return _finish(y, single)


def sinc(t: np.ndarray) -> np.ndarray:
    """Unnormalized ``sin(t)/t`` with ``sinc(0) = 1``."""
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    nz = t != 0
    out[nz] = np.sin(t[nz]) / t[nz]
    return out


def sinc_gram(A: np.ndarray, B_nodes: np.ndarray, band: float) -> np.ndarray:
    """``G[i, j] = prod_k sinc(band * (A[i, k] - B_nodes[j, k]))``."""
    G = np.ones((A.shape[0], B_nodes.shape[0]))
    for k in range(A.shape[1]):
        G *= sinc(band * (A[:, k : k + 1] - B_nodes[:, k]))
    return G


@dataclass(frozen=True, eq=False)
class SincKernelModel:
    K: int
    band: float
    nodes: np.ndarray
    weights: np.ndarray
    ridge: float = 0.0
    condition_estimate: float = 1.0
    max_train_residual: float = 0.0
    merged_duplicates: int = 0

    def __post_init__(self):
        X = np.asarray(self.nodes, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.K)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if X.shape != (w.size, self.K):
            raise InputError(f"nodes {X.shape} and weights {w.shape} disagree")
        if not self.band > 0:
            raise InputError(f"band must be > 0, got {self.band}")
        X.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "nodes", X)
        object.__setattr__(self, "weights", w)

    @property
    def euclidean_band(self) -> float:
        return self.band * math.sqrt(self.K)

    @property
    def degenerate(self) -> bool:
        return False

    def __call__(self, x):
        X, single = as_points(x, self.K)
        y = np.empty(X.shape[0])
        for s in range(0, X.shape[0], _EVAL_CHUNK):
            G = sinc_gram(X[s : s + _EVAL_CHUNK], self.nodes, self.band)
            y[s : s + _EVAL_CHUNK] = np.sum(G * self.weights, axis=1)
        return _finish(y, single)


@dataclass(frozen=True)
class ZeroModel:
    """The constant-zero predictor (risk baseline)."""

    K: int
    degenerate: bool = field(default=False, init=False)

    def __call__(self, x):
        X, single = as_points(x, self.K)
        return _finish(np.zeros(X.shape[0]), single)


def _resolve_scale(dataset: Dataset, center: np.ndarray, input_scale, exact: bool) -> float:
    if input_scale is None:
        input_scale = "data" if exact else "distribution"
    if input_scale == "distribution" and dataset.distribution is not None:
        return dataset.distribution.scale
    if input_scale in ("data", "distribution"):
        spread = float(np.max(np.abs(dataset.inputs - center))) if dataset.N else 0.0
        return spread if spread > 0 else 1.0
    if isinstance(input_scale, str):
        raise InputError(f"unknown input scale policy {input_scale!r}")
    if not input_scale > 0:
        raise InputError(f"input_scale must be > 0, got {input_scale}")
    return float(input_scale)


def spacing_band(X: np.ndarray, factor: float = 4.0) -> float:
    """``factor * pi / h`` with ``h`` the mean per-axis node spacing.

    ``h = (largest coordinate range) / N**(1/K)``. With ``factor = 1`` this
    is the band whose Nyquist spacing ``pi / B`` equals ``h``.
    """
    X = np.atleast_2d(X)
    N, K = X.shape
    span = float(np.max(X.max(axis=0) - X.min(axis=0))) if N else 0.0
    if span <= 0:
        return factor * math.pi
    return factor * math.pi * N ** (1.0 / K) / span


def fit_polynomial(dataset: Dataset, degree: int | None = None,
                   degree_cap: int = DEFAULT_DEGREE_CAP, center=None,
                   input_scale: float | str | None = None,
                   exact: bool = False) -> PolynomialModel:
    """Least-squares polynomial fit in the graded-lex monomial basis.

    Parameters
    ----------
    degree
        Total degree. Defaults to the largest degree whose monomial count does
        not exceed ``N``, limited by `degree_cap`.
    center
        Expansion point, default the origin.
    input_scale
        Inputs are divided by this before the monomials are formed. Either a
        number or a policy: ``"distribution"`` (sigma or U of the dataset's
        input law) or ``"data"`` (largest centred coordinate). The default is
        ``"data"`` in exact mode, where high degrees need inputs in
        ``[-1, 1]``, and ``"distribution"`` otherwise.
    exact
        Interpolation mode: the cap is lifted and a degree with more
        monomials than samples is rejected.

    Notes
    -----
    Square systems are solved with the basic pivoted-QR solution even when
    badly conditioned, since the solve is backward stable and still
    reproduces the data. Any fit that is rank deficient (over-determined
    case), under-determined, or fails to interpolate (square case) falls back
    to the minimum-norm solution and is flagged ``degenerate``.
    """
    N, K = dataset.N, dataset.K
    if N < 1:
        raise InputError("cannot fit a polynomial to an empty dataset")
    if degree is None:
        degree = degree_for_sample_count(N, K, N if exact else degree_cap)
    P = count_monomials(K, degree)
    if exact and P > N:
        raise InputError(f"degree {degree} needs {P} samples for interpolation, have {N}")
    x0 = np.zeros(K) if center is None else np.asarray(center, dtype=float).reshape(-1)
    if x0.size != K:
        raise InputError(f"center has dimension {x0.size}, data {K}")
    scale = _resolve_scale(dataset, x0, input_scale, exact)
    idx = enumerate_multi_indices(K, degree)
    A = monomial_matrix((dataset.inputs - x0) / scale, idx)
    y = dataset.outputs

    degenerate = False
    if P > N:
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        degenerate, cond = True, math.inf
    else:
        Q, R, perm = sla.qr(A, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        cond = float(d[0] / d[-1]) if d[-1] > 0 else math.inf
        tol = max(N, P) * np.finfo(float).eps * d[0]
        coef = np.zeros(P)
        if d[-1] > 0 and (P == N or d[-1] > tol):
            with np.errstate(all="ignore"):
                coef[perm] = sla.solve_triangular(R, Q.T @ y)
        else:
            degenerate = True
        if not degenerate and P == N and np.unique(dataset.inputs, axis=0).shape[0] < N:
            # repeated rows make the square system exactly singular
            degenerate = True
        if not degenerate and P == N:
            resid = np.max(np.abs(A @ coef - y))
            if not (np.all(np.isfinite(coef)) and resid <= INTERP_RTOL * (1 + np.max(np.abs(y)))):
                degenerate = True
        if degenerate:
            coef, *_ = np.linalg.lstsq(A, y, rcond=tol / d[0] if d[0] > 0 else None)
    resid_norm = float(np.linalg.norm(A @ coef - y))
    return PolynomialModel(K, int(degree), coef, x0, scale, cond, resid_norm, degenerate)


def _merge_duplicates(X: np.ndarray, y: np.ndarray):
    uniq, inv = np.unique(X, axis=0, return_inverse=True)
    if uniq.shape[0] == X.shape[0]:
        return X, y, 0
    inv = inv.reshape(-1)
    sums = np.zeros(uniq.shape[0])
    np.add.at(sums, inv, y)
    counts = np.bincount(inv, minlength=uniq.shape[0])
    return uniq, sums / counts, X.shape[0] - uniq.shape[0]


def fit_sinc_interpolant(dataset: Dataset, band: float, ridge: float = DEFAULT_RIDGE) -> SincKernelModel:
    """Solve ``(G + ridge I) w = y`` for the sinc-kernel interpolant.

    Exact duplicate inputs are merged with averaged outputs. If the Cholesky
    factorization fails the ridge is raised tenfold (starting from 1e-12 when
    it was 0) up to 1e-4, after which :class:`ConditioningError` is raised.
    The ridge actually used is stored on the model.
    """
    if dataset.N < 1:
        raise InputError("cannot fit an interpolant to an empty dataset")
    if not band > 0:
        raise InputError(f"band must be > 0, got {band}")
    if ridge < 0:
        raise InputError(f"ridge must be >= 0, got {ridge}")
    X, y, merged = _merge_duplicates(dataset.inputs, dataset.outputs)
    G = sinc_gram(X, X, band)
    n = X.shape[0]
    lam = float(ridge)
    while True:
        try:
            factor = sla.cho_factor(G + lam * np.eye(n), lower=True, check_finite=True)
            w = sla.cho_solve(factor, y)
            if np.all(np.isfinite(w)):
                break
        except np.linalg.LinAlgError:
            pass
        lam = max(lam * 10.0, 1e-12)
        if lam > MAX_RIDGE * (1 + 1e-9):
            raise ConditioningError(f"kernel system unsolvable with ridge up to {MAX_RIDGE}")
    ev = np.linalg.eigvalsh(G + lam * np.eye(n))
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    resid = float(np.max(np.abs(G @ w - y)))
    return SincKernelModel(dataset.K, float(band), X, w, lam, cond, resid, merged)


@dataclass(frozen=True)
class LearnerSpec:
    """Which learner to fit and how.

    ``kind`` is one of ``poly``, ``sinc``, ``oracle`` (the target itself) or
    ``zero``. For ``sinc`` the ``band`` is a number, None ("use the target's
    declared band") or ``"auto"`` (``band_factor`` times the spacing band of
    the training inputs, see :func:`spacing_band`).
    """

    kind: str = "poly"
    degree: int | None = None
    degree_cap: int = DEFAULT_DEGREE_CAP
    exact: bool = False
    band: float | str | None = None
    band_factor: float = 4.0
    ridge: float = DEFAULT_RIDGE
    input_scale: float | str | None = None

    def __post_init__(self):
        if self.kind not in ("poly", "sinc", "oracle", "zero"):
            raise InputError(f"unknown learner kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "LearnerSpec":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown learner fields {sorted(unknown)}")
        return cls(**d)


def fit_learner(spec: LearnerSpec, dataset: Dataset, target=None):
    if spec.kind == "poly":
        return fit_polynomial(dataset, degree=spec.degree, degree_cap=spec.degree_cap,
                              input_scale=spec.input_scale, exact=spec.exact)
    if spec.kind == "sinc":
        band = spec.band
        if band == "auto":
            band = spacing_band(dataset.inputs, spec.band_factor)
        elif band is None:
            band = getattr(target, "declared_band", None)
            if band is None or not math.isfinite(band):
                raise InputError("sinc learner needs an explicit band for this target")
        return fit_sinc_interpolant(dataset, band, spec.ridge)
    if spec.kind == "oracle":
        if target is None:
            raise InputError("oracle learner needs the target")
        return target
    return ZeroModel(dataset.K)


def model_size_label(model) -> float:
    """Degree for polynomials, band for sinc models, nan otherwise."""
    if isinstance(model, PolynomialModel):
        return float(model.degree)
    if isinstance(model, SincKernelModel):
        return model.band
    return math.nan


def eval_model(model, x):
    return model(x)


def bernstein_check_model(model: PolynomialModel, B: float, H: float) -> BernsteinReport:
    """Check ``|c_alpha| * alpha! <= B**|alpha| * H`` for every coefficient.

    Coefficients are taken with the input scaling undone, i.e. with respect
    to ``(x - center)``.
    """
    idx = model.indices
    raw = model.raw_coefficients()
    lhs = np.array([abs(c) * multi_factorial(a) for c, a in zip(raw, idx)])
    lim = np.array([B ** order(a) * H for a in idx])
    return BernsteinReport(idx, lhs, lim)


def model_to_dict(model) -> dict:
    if isinstance(model, PolynomialModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "poly",
            "K": model.K,
            "degree": model.degree,
            "center": model.center.tolist(),
            "input_scale": model.input_scale,
            "coefficients": model.coefficients.tolist(),
            "diagnostics": {
                "condition_estimate": _json_num(model.condition_estimate),
                "residual_norm": _json_num(model.residual_norm),
                "degenerate": model.degenerate,
            },
        }
    if isinstance(model, SincKernelModel):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "sinc",
            "K": model.K,
            "band": model.band,
            "ridge": model.ridge,
            "nodes": model.nodes.tolist(),
            "weights": model.weights.tolist(),
            "diagnostics": {
                "condition_estimate": _json_num(model.condition_estimate),
                "max_train_residual": _json_num(model.max_train_residual),
                "merged_duplicates": model.merged_duplicates,
            },
        }
    raise InputError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    try:
        diag = d.get("diagnostics", {})
        if d["kind"] == "poly":
            return PolynomialModel(
                int(d["K"]), int(d["degree"]), d["coefficients"], d["center"],
                float(d["input_scale"]),
                _from_json_num(diag.get("condition_estimate", "nan")),
                _from_json_num(diag.get("residual_norm", "nan")),
                bool(diag.get("degenerate", False)),
            )
        if d["kind"] == "sinc":
            K = int(d["K"])
            return SincKernelModel(
                K, float(d["band"]), np.array(d["nodes"], dtype=float).reshape(-1, K),
                d["weights"], float(d["ridge"]),
                _from_json_num(diag.get("condition_estimate", "nan")),
                _from_json_num(diag.get("max_train_residual", "nan")),
                int(diag.get("merged_duplicates", 0)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model record: {exc}") from exc
    raise InputError(f"unknown model kind {d.get('kind')!r}")
