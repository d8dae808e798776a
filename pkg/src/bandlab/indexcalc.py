"""Multi-index combinatorics and log-space scalar helpers.

A multi-index is a plain tuple of nonnegative ints. Sets of multi-indices are
always produced in graded lexicographic order: ascending total degree, and
within one degree, descending in the first exponent, then the second, etc.
So for ``K=2, n=2`` the order is ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)``.
Every coefficient vector in the package is aligned to this order.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import CapacityError, InputError

MultiIndex = tuple[int, ...]

# Largest count we are willing to hand out; coefficient vectors are indexed
# with machine integers.
MAX_MONOMIALS = 2**63 - 1
# Below this exact big-int factorials are cheap and accurate.
_EXACT_LOG_FACTORIAL_LIMIT = 1000


def order(alpha: Sequence[int]) -> int:
    """Total order ``|alpha|``."""
    return int(sum(alpha))


def multi_factorial(alpha: Sequence[int]) -> int:
    """``alpha! = alpha_1! * ... * alpha_K!`` as an exact integer."""
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def _check_dims(K, n):
    if int(K) != K or K < 1:
        raise InputError(f"dimension K must be a positive integer, got {K!r}")
    if int(n) != n or n < 0:
        raise InputError(f"degree n must be a nonnegative integer, got {n!r}")


def _compositions(K: int, total: int):
    # all K-tuples summing to `total`, first exponent descending
    if K == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for tail in _compositions(K - 1, total - head):
            yield (head,) + tail


@lru_cache(maxsize=256)
def _enumerate_cached(K: int, n: int) -> tuple[MultiIndex, ...]:
    out = []
    for d in range(n + 1):
        out.extend(_compositions(K, d))
    return tuple(out)


def enumerate_multi_indices(K: int, n: int) -> list[MultiIndex]:
    """All multi-indices of dimension `K` with total order at most `n`.

    Returns exactly ``C(n+K, K)`` tuples in graded lexicographic order.
    """
    _check_dims(K, n)
    count_monomials(K, n)
    return list(_enumerate_cached(int(K), int(n)))


def count_monomials(K: int, n: int) -> int:
    """Number of monomials of total degree <= n in K variables, ``C(n+K, K)``."""
    _check_dims(K, n)
    c = math.comb(int(n) + int(K), int(K))
    if c > MAX_MONOMIALS:
        raise CapacityError(f"C({n}+{K}, {K}) exceeds the supported index range")
    return c


def degree_for_sample_count(N: int, K: int, n_cap: int) -> int:
    """Largest total degree whose monomial count fits in `N` samples, capped.

    This is the pairing ``C(n+K, K) <= N`` used to choose the learner degree,
    so that ``n`` grows like ``N**(1/K)``.
    """
    if N < 1:
        raise InputError(f"sample count must be >= 1, got {N}")
    _check_dims(K, n_cap)
    n = 0
    while n < n_cap and math.comb(n + 1 + K, K) <= N:
        n += 1
    return n


def log_factorial(m: int) -> float:
    """Natural log of ``m!``."""
    if int(m) != m or m < 0:
        raise InputError(f"log_factorial needs a nonnegative integer, got {m!r}")
    m = int(m)
    if m <= _EXACT_LOG_FACTORIAL_LIMIT:
        return math.log(math.factorial(m))
    return math.lgamma(m + 1.0)


def monomial_eval(x, alpha: Sequence[int], center=None) -> float:
    """Evaluate ``(x - center)**alpha`` at a single point."""
    x = np.asarray(x, dtype=float).reshape(-1)
    alpha = tuple(int(a) for a in alpha)
    c = np.zeros_like(x) if center is None else np.asarray(center, dtype=float).reshape(-1)
    if not (x.size == c.size == len(alpha)):
        raise InputError(
            f"dimension mismatch: x has {x.size}, center {c.size}, alpha {len(alpha)}"
        )
    out = 1.0
    for xk, ck, ak in zip(x, c, alpha):
        if ak:
            out *= (xk - ck) ** ak
    return float(out)


def monomial_matrix(X, indices: Sequence[MultiIndex]) -> np.ndarray:
    """Design matrix ``V[i, j] = X[i]**indices[j]`` for already-centred inputs.

    Powers are built by repeated multiplication so that every column is
    computed the same way regardless of where it sits in the index list.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, K = X.shape
    if indices and len(indices[0]) != K:
        raise InputError(f"inputs have dimension {K}, indices {len(indices[0])}")
    max_deg = max((max(a) for a in indices), default=0)
    powers = np.ones((max_deg + 1, N, K))
    for d in range(1, max_deg + 1):
        powers[d] = powers[d - 1] * X
    V = np.ones((N, len(indices)))
    for j, alpha in enumerate(indices):
        for k, a in enumerate(alpha):
            if a:
                V[:, j] *= powers[a, :, k]
    return V
