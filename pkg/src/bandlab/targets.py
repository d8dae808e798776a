"""Target functions with controlled spectral content.

Three families are provided:

* strictly bandlimited cosine mixtures ``f(x) = sum_j a_j cos(w_j . x + phi_j)``
  with every ``||w_j||_2 <= B`` (:func:`synth_strict`);
* approximately bandlimited mixtures whose frequencies are Gaussian and hence
  unbounded (:func:`synth_approx`);
* a non-bandlimited hash-noise target that assigns an independent uniform
  value in ``[-1, 1]`` to every cell of a fine lattice
  (:func:`synth_nonbandlimited`).

Band norms are Euclidean throughout. For a cosine mixture the spectrum is a
finite set of point masses, so the out-of-band "energy" is the discrete proxy
``sum of a_j**2 over ||w_j|| > B``. The stored sup bound ``H`` is the certified
``sum_j |a_j|``, which is always >= ``sup |f|``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .errors import InputError
from .indexcalc import enumerate_multi_indices, multi_factorial, order

SCHEMA_VERSION = 1
DEFAULT_CELL_RESOLUTION = 1e-3


def as_points(x, K: int) -> tuple[np.ndarray, bool]:
    """Coerce `x` to an ``(N, K)`` array; the flag tells if it was one point."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if K != 1:
            raise InputError(f"scalar input given for dimension {K}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if arr.size == K:
            return arr.reshape(1, K), True
        if K == 1:
            return arr.reshape(-1, 1), False
        raise InputError(f"point has dimension {arr.size}, expected {K}")
    if arr.ndim == 2 and arr.shape[1] == K:
        return arr, False
    raise InputError(f"inputs of shape {arr.shape} do not match dimension {K}")


def _finish(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def _quarter_turn_cos(theta: np.ndarray, turns: int) -> np.ndarray:
    """``cos(theta + turns*pi/2)`` without rounding the shift."""
    r = turns % 4
    if r == 0:
        return np.cos(theta)
    if r == 1:
        return -np.sin(theta)
    if r == 2:
        return -np.cos(theta)
    return np.sin(theta)


@dataclass(frozen=True, eq=False)
class CosineMixtureTarget:
    """``f(x) = sum_j a_j cos(w_j . x + phi_j)``.

    `declared_band` is ``math.inf`` for approximately bandlimited targets.
    """

    amplitudes: np.ndarray
    frequencies: np.ndarray  # (J, K), rad per unit x
    phases: np.ndarray
    declared_band: float
    kind: str = "strict"
    seed: int | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float).reshape(-1)
        w = np.asarray(self.frequencies, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        p = np.asarray(self.phases, dtype=float).reshape(-1)
        if a.size == 0:
            raise InputError("a cosine mixture needs at least one component")
        if not (a.size == w.shape[0] == p.size):
            raise InputError("amplitudes, frequencies and phases disagree in length")
        for name, arr in (("amplitudes", a), ("frequencies", w), ("phases", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "declared_band", float(self.declared_band))
        if self.kind == "strict" and self.declared_band < self.max_norm:
            raise InputError(
                f"component norm {self.max_norm} exceeds declared band {self.declared_band}"
            )

    @property
    def K(self) -> int:
        return self.frequencies.shape[1]

    @property
    def J(self) -> int:
        return self.amplitudes.size

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.frequencies**2, axis=1))

    @property
    def max_norm(self) -> float:
        return float(np.max(self.norms))

    @property
    def h_bound(self) -> float:
        return math.fsum(np.abs(self.amplitudes))

    @property
    def is_strict(self) -> bool:
        return math.isfinite(self.declared_band)

    @property
    def id(self) -> str:
        payload = json.dumps(_mixture_content(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def phase_matrix(self, X: np.ndarray) -> np.ndarray:
        # elementwise accumulation keeps results independent of batch size
        theta = np.broadcast_to(self.phases, (X.shape[0], self.J)).copy()
        for k in range(self.K):
            theta += X[:, k : k + 1] * self.frequencies[:, k]
        return theta

    def __call__(self, x):
        X, single = as_points(x, self.K)
        theta = self.phase_matrix(X)
        y = np.zeros(X.shape[0])
        for j in range(self.J):
            y += self.amplitudes[j] * np.cos(theta[:, j])
        return _finish(y, single)


@dataclass(frozen=True)
class HashNoiseTarget:
    """Pseudo-random, non-bandlimited target.

    ``x`` is quantized to the lattice cell ``floor(x / cell_resolution)`` and
    the cell coordinates are hashed with the seed into a uniform value in
    ``(-1, 1)``. Distinct cells give independent values.
    """

    K: int
    cell_resolution: float = DEFAULT_CELL_RESOLUTION
    seed: int = 0
    kind: str = field(default="hash", init=False)

    def __post_init__(self):
        if self.K < 1:
            raise InputError(f"dimension must be >= 1, got {self.K}")
        if not self.cell_resolution > 0:
            raise InputError(f"cell_resolution must be > 0, got {self.cell_resolution}")

    @property
    def h_bound(self) -> float:
        return 1.0

    @property
    def id(self) -> str:
        payload = json.dumps(target_to_dict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def __call__(self, x):
        X, single = as_points(x, self.K)
        cells = np.floor(X / self.cell_resolution).astype(np.int64).view(np.uint64)
        h = streams.splitmix64(
            np.full(X.shape[0], streams.derive_seed(self.seed, streams.NAMESPACES["hash"]),
                    dtype=np.uint64)
        )
        for k in range(self.K):
            h = streams.splitmix64(h ^ cells[:, k])
        y = 2.0 * streams.words_to_uniform(h) - 1.0
        return _finish(y, single)


def _check_common(K, J, H):
    if int(K) != K or K < 1:
        raise InputError(f"K must be a positive integer, got {K!r}")
    if int(J) != J or J < 1:
        raise InputError(f"J must be a positive integer, got {J!r}")
    if not H > 0:
        raise InputError(f"H must be > 0, got {H!r}")


def _draw_components(K, J, seed):
    # per component: K direction normals, then radius, phase, amplitude uniforms
    width = K + 3
    u = streams.uniforms(seed, "synth", 0, J * width).reshape(J, width)
    from scipy.special import ndtri

    return ndtri(u[:, :K]), u[:, K], u[:, K + 1], u[:, K + 2]


def _normalize_amplitudes(raw, H):
    return raw * (H / math.fsum(raw))


def synth_strict(K: int, B: float, J: int, H: float, seed: int,
                 zero_phase: bool = False) -> CosineMixtureTarget:
    """Random cosine mixture strictly bandlimited by `B`.

    Frequencies are uniform in the Euclidean ball of radius `B`, phases
    uniform in ``[0, 2*pi)``, amplitudes positive with ``sum a_j = H``.
    `zero_phase` forces all phases to 0 (handy for hand-checkable targets).
    """
    _check_common(K, J, H)
    if not B > 0:
        raise InputError(f"band B must be > 0, got {B!r}")
    g, ur, up, ua = _draw_components(K, J, seed)
    direction = g / np.sqrt(np.sum(g**2, axis=1, keepdims=True))
    radius = B * ur ** (1.0 / K)
    omega = direction * radius[:, None]
    norms = np.sqrt(np.sum(omega**2, axis=1))
    over = norms > B
    if np.any(over):
        omega[over] *= (np.nextafter(B, 0.0) / norms[over])[:, None]
    phases = np.zeros(J) if zero_phase else 2.0 * math.pi * up
    return CosineMixtureTarget(_normalize_amplitudes(ua, H), omega, phases,
                               declared_band=B, kind="strict", seed=seed)


def synth_approx(K: int, s: float, J: int, H: float, seed: int) -> CosineMixtureTarget:
    """Cosine mixture with isotropic Gaussian frequencies (std `s` per axis)."""
    _check_common(K, J, H)
    if not s > 0:
        raise InputError(f"spectral std must be > 0, got {s!r}")
    g, _, up, ua = _draw_components(K, J, seed)
    return CosineMixtureTarget(_normalize_amplitudes(ua, H), s * g, 2.0 * math.pi * up,
                               declared_band=math.inf, kind="approx", seed=seed)


def synth_nonbandlimited(K: int, cell_resolution: float = DEFAULT_CELL_RESOLUTION,
                         seed: int = 0) -> HashNoiseTarget:
    return HashNoiseTarget(K=K, cell_resolution=cell_resolution, seed=seed)


def cosine_target(amplitudes, frequencies, phases, band: float | None = None):
    """Hand-built mixture; the band defaults to the largest component norm."""
    w = np.asarray(frequencies, dtype=float)
    if w.ndim == 1:
        w = w.reshape(-1, 1)
    if band is None:
        band = float(np.max(np.sqrt(np.sum(w**2, axis=1))))
    kind = "strict" if math.isfinite(band) else "approx"
    return CosineMixtureTarget(amplitudes, w, phases, declared_band=band, kind=kind)


def eval_target(target, x):
    """``y = f(x)`` for one point (float) or an ``(N, K)`` batch (array)."""
    return target(x)


def out_of_band_energy(target: CosineMixtureTarget, B: float) -> float:
    """``sum of a_j**2`` over components with ``||w_j||_2 > B``."""
    if B < 0:
        raise InputError(f"band must be >= 0, got {B}")
    tail = target.amplitudes[target.norms > B]
    return math.fsum(tail**2)


def approx_band(target: CosineMixtureTarget, eps: float) -> float:
    """Smallest band ``B`` (0 or a component norm) with tail energy <= eps**2."""
    if not eps > 0:
        raise InputError(f"eps must be > 0, got {eps}")
    for B in np.concatenate(([0.0], np.unique(target.norms))):
        if out_of_band_energy(target, float(B)) <= eps * eps:
            return float(B)
    return target.max_norm


def per_dim_bands(target: CosineMixtureTarget) -> np.ndarray:
    return np.max(np.abs(target.frequencies), axis=0)


def _derivative(target: CosineMixtureTarget, x0, alpha) -> float:
    X, _ = as_points(x0, target.K)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != target.K:
        raise InputError(f"multi-index has dimension {len(alpha)}, target {target.K}")
    theta = target.phase_matrix(X)[0]
    wpow = np.ones(target.J)
    for k, a in enumerate(alpha):
        if a:
            wpow = wpow * target.frequencies[:, k] ** a
    terms = target.amplitudes * wpow * _quarter_turn_cos(theta, order(alpha))
    return math.fsum(terms)


def target_taylor_coeff(target: CosineMixtureTarget, x0, alpha) -> float:
    """Taylor coefficient ``d^alpha f(x0) / alpha!`` of a cosine mixture.

    Each derivative of a cosine is a quarter-turn phase shift, so
    ``d^alpha f(x0) = sum_j a_j w_j**alpha cos(w_j . x0 + phi_j + |alpha| pi/2)``.
    """
    return _derivative(target, x0, alpha) / multi_factorial(alpha)


@dataclass(frozen=True)
class BernsteinReport:
    """Per multi-index check of ``|d^alpha f| <= B**|alpha| * H``."""

    indices: list
    derivative_abs: np.ndarray
    limits: np.ndarray

    @property
    def margins(self) -> np.ndarray:
        return self.limits - self.derivative_abs

    @property
    def passed(self) -> bool:
        return bool(np.all(self.derivative_abs <= self.limits))

    def order_margins(self) -> dict[int, float]:
        """Worst margin for every total order."""
        out: dict[int, float] = {}
        for alpha, m in zip(self.indices, self.margins):
            d = order(alpha)
            out[d] = min(out.get(d, math.inf), float(m))
        return out

    def failures(self) -> list:
        return [a for a, ok in zip(self.indices, self.derivative_abs <= self.limits) if not ok]


def bernstein_check_target(target: CosineMixtureTarget, x0, n_max: int,
                           B: float | None = None, H: float | None = None) -> BernsteinReport:
    """Check the derivative bound of a strict target for all ``|alpha| <= n_max``."""
    B = target.declared_band if B is None else B
    H = target.h_bound if H is None else H
    if not math.isfinite(B):
        raise InputError("Bernstein check needs a finite band")
    idx = enumerate_multi_indices(target.K, n_max)
    d = np.array([abs(_derivative(target, x0, a)) for a in idx])
    lim = np.array([B ** order(a) * H for a in idx])
    return BernsteinReport(idx, d, lim)


def _mixture_content(t: CosineMixtureTarget) -> dict:
    return {
        "kind": t.kind,
        "K": t.K,
        "B": t.declared_band if t.is_strict else "inf",
        "band_norm": "euclidean",
        "components": [
            {"a": float(a), "omega": [float(v) for v in w], "phi": float(p)}
            for a, w, p in zip(t.amplitudes, t.frequencies, t.phases)
        ],
    }


def target_to_dict(target) -> dict:
    if isinstance(target, HashNoiseTarget):
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "hash",
            "K": target.K,
            "cell_resolution": target.cell_resolution,
            "seed": target.seed,
        }
    out = {"schema_version": SCHEMA_VERSION}
    out.update(_mixture_content(target))
    out["H"] = target.h_bound
    out["seed"] = target.seed
    out["id"] = target.id
    return out


def target_from_dict(d: dict):
    try:
        if d["kind"] == "hash":
            return HashNoiseTarget(K=int(d["K"]), cell_resolution=float(d["cell_resolution"]),
                                   seed=int(d["seed"]))
        comps = d["components"]
        B = math.inf if d["B"] in ("inf", None) else float(d["B"])
        t = CosineMixtureTarget(
            [c["a"] for c in comps],
            np.array([c["omega"] for c in comps], dtype=float).reshape(len(comps), int(d["K"])),
            [c["phi"] for c in comps],
            declared_band=B,
            kind=d["kind"],
            seed=d.get("seed"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed target record: {exc}") from exc
    if d.get("id") is not None and d["id"] != t.id:
        raise InputError(f"target id mismatch: file says {d['id']}, content gives {t.id}")
    return t
