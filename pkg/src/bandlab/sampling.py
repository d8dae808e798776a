"""Input distributions, i.i.d. datasets and grid-cell coverage diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import streams
from .errors import CapacityError, InputError

SCHEMA_VERSION = 1
MAX_CELLS = 10**8
MAX_EXACT_CELLS = 20

KINDS = ("isotropic_gaussian", "diagonal_gaussian", "bounded_uniform")


@dataclass(frozen=True)
class InputDistribution:
    """Product input density ``p(x)``.

    ``sigma`` holds one value for the isotropic Gaussian and K values for the
    diagonal one; ``U`` is the half-width of the uniform hypercube.
    """

    kind: str
    K: int
    sigma: tuple[float, ...] = ()
    U: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown distribution kind {self.kind!r}")
        if int(self.K) != self.K or self.K < 1:
            raise InputError(f"K must be a positive integer, got {self.K!r}")
        sig = tuple(float(s) for s in np.atleast_1d(self.sigma)) if self.sigma != () else ()
        object.__setattr__(self, "sigma", sig)
        if self.kind == "bounded_uniform":
            if self.U is None or not self.U > 0:
                raise InputError(f"U must be > 0, got {self.U!r}")
            object.__setattr__(self, "U", float(self.U))
            return
        want = 1 if self.kind == "isotropic_gaussian" else self.K
        if len(sig) != want:
            raise InputError(f"{self.kind} needs {want} sigma value(s), got {len(sig)}")
        if not all(s > 0 for s in sig):
            raise InputError(f"sigma values must be > 0, got {sig}")

    @property
    def sigmas(self) -> np.ndarray:
        """Per-coordinate scales (std for Gaussians, half-width for uniform)."""
        if self.kind == "bounded_uniform":
            return np.full(self.K, self.U)
        return np.broadcast_to(np.asarray(self.sigma), (self.K,)).astype(float)

    @property
    def scale(self) -> float:
        """Single length scale used to normalize polynomial inputs."""
        return float(np.max(self.sigmas))

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map open-interval uniforms of shape (N, K) to draws."""
        if self.kind == "bounded_uniform":
            return self.U * (2.0 * u - 1.0)
        from scipy.special import ndtri

        return ndtri(u) * self.sigmas

    def to_dict(self) -> dict:
        if self.kind == "bounded_uniform":
            params = {"U": self.U}
        elif self.kind == "isotropic_gaussian":
            params = {"sigma": self.sigma[0]}
        else:
            params = {"sigma": list(self.sigma)}
        return {"kind": self.kind, "K": self.K, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "InputDistribution":
        params = d.get("params", d)
        try:
            kind, K = d["kind"], int(d["K"])
        except KeyError as exc:
            raise InputError(f"distribution record lacks {exc}") from exc
        if kind == "bounded_uniform":
            return cls(kind, K, U=params.get("U"))
        sigma = params.get("sigma", params.get("sigmas"))
        if sigma is None:
            raise InputError(f"{kind} record lacks sigma")
        return cls(kind, K, sigma=tuple(np.atleast_1d(sigma)))


def isotropic_gaussian(K: int, sigma: float) -> InputDistribution:
    return InputDistribution("isotropic_gaussian", K, sigma=(sigma,))


def diagonal_gaussian(sigmas) -> InputDistribution:
    sigmas = tuple(float(s) for s in sigmas)
    return InputDistribution("diagonal_gaussian", len(sigmas), sigma=sigmas)


def bounded_uniform(K: int, U: float) -> InputDistribution:
    return InputDistribution("bounded_uniform", K, U=U)


def draw_inputs(dist: InputDistribution, N: int, seed: int, namespace="train",
                start: int = 0) -> np.ndarray:
    """``N`` i.i.d. points of shape ``(N, K)``.

    Sample ``i`` depends only on ``(seed, namespace, i)``; `start` generates
    the block ``start .. start+N-1`` of the same sequence.
    """
    if N < 0:
        raise InputError(f"N must be >= 0, got {N}")
    K = dist.K
    u = streams.uniforms(seed, namespace, start * K, N * K).reshape(N, K)
    return dist.transform(u)


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    outputs: np.ndarray
    seed: int | None = None
    target_id: str | None = None
    distribution: InputDistribution | None = None

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.outputs, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise InputError(f"{X.shape[0]} inputs but {y.size} outputs")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "outputs", y)

    @property
    def N(self) -> int:
        return self.outputs.size

    @property
    def K(self) -> int:
        return self.inputs.shape[1]

    def prefix(self, n: int) -> "Dataset":
        return Dataset(self.inputs[:n], self.outputs[:n], self.seed, self.target_id,
                       self.distribution)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "K": self.K,
            "N": self.N,
            "seed": self.seed,
            "target_id": self.target_id,
            "distribution": None if self.distribution is None else self.distribution.to_dict(),
            "inputs": self.inputs.tolist(),
            "outputs": self.outputs.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        try:
            K, N = int(d["K"]), int(d["N"])
            X = np.array(d["inputs"], dtype=float).reshape(N, K)
            dist = d.get("distribution")
            return cls(X, d["outputs"], d.get("seed"), d.get("target_id"),
                       None if dist is None else InputDistribution.from_dict(dist))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed dataset record: {exc}") from exc


def make_dataset(target, dist: InputDistribution, N: int, seed: int) -> Dataset:
    if target.K != dist.K:
        raise InputError(f"target dimension {target.K} != distribution dimension {dist.K}")
    X = draw_inputs(dist, N, seed)
    y = target(X) if N else np.zeros(0)
    return Dataset(X, y, seed, target.id, dist)


@dataclass(frozen=True)
class CoverageReport:
    total_cells: int
    occupied_cells: int
    fraction: float

    def to_dict(self) -> dict:
        return {"total_cells": self.total_cells, "occupied_cells": self.occupied_cells,
                "fraction": self.fraction}


def cells_per_axis(U: float, B: float) -> int:
    side = math.pi / B
    # the ratio is often an integer up to rounding, e.g. 2*pi / (pi/4)
    return max(1, math.ceil(2.0 * U / side - 1e-9))


def cell_occupancy(points, U: float, B: float) -> CoverageReport:
    """Occupancy of the ``pi/B`` grid on ``[-U, U)^K``.

    The grid is anchored at ``-U``; the last cell along each axis is
    truncated at ``U``. Points outside the cube are ignored.
    """
    if not (U > 0 and B > 0):
        raise InputError(f"U and B must be > 0, got U={U}, B={B}")
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    K = X.shape[1]
    m = cells_per_axis(U, B)
    total = m**K
    if total > MAX_CELLS:
        raise CapacityError(f"{total} cells exceeds the guard of {MAX_CELLS}")
    if X.shape[0] == 0:
        return CoverageReport(total, 0, 0.0)
    inside = np.all((X >= -U) & (X < U), axis=1)
    idx = np.floor((X[inside] + U) / (math.pi / B)).astype(np.int64)
    idx = np.clip(idx, 0, m - 1)
    flat = np.ravel_multi_index(tuple(idx.T), (m,) * K) if idx.size else np.zeros(0, np.int64)
    occupied = int(np.unique(flat).size)
    return CoverageReport(total, occupied, occupied / total)


def occupancy_probability(cell_masses, N: int) -> float:
    """Probability that `N` i.i.d. draws leave none of the listed cells empty.

    Exact inclusion-exclusion over all nonempty subsets ``S`` of cells:
    ``1 - sum_S (-1)**(|S|+1) (1 - mass(S))**N``. Masses may sum to less
    than one (the rest of the space absorbs the remaining draws).
    """
    eps = np.asarray(cell_masses, dtype=float).reshape(-1)
    M = eps.size
    if M < 1:
        raise InputError("need at least one cell")
    if M > MAX_EXACT_CELLS:
        raise CapacityError(f"exact enumeration limited to {MAX_EXACT_CELLS} cells, got {M}")
    if np.any(eps <= 0):
        raise InputError("cell masses must be > 0")
    if math.fsum(eps) > 1.0 + 1e-12:
        raise InputError(f"cell masses sum to {math.fsum(eps)} > 1")
    if N < 0:
        raise InputError(f"N must be >= 0, got {N}")
    # subset masses and sizes indexed by bitmask
    mass = np.zeros(1)
    size = np.zeros(1, dtype=np.int64)
    for e in eps:
        mass = np.concatenate((mass, mass + e))
        size = np.concatenate((size, size + 1))
    mass, size = mass[1:], size[1:]
    miss = np.clip(1.0 - mass, 0.0, 1.0) ** N
    sign = np.where(size % 2 == 1, 1.0, -1.0)
    p_some_empty = math.fsum(sign * miss)
    return float(min(1.0, max(0.0, 1.0 - p_some_empty)))
