"""Effect sizes and significance tests for paired system comparisons."""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np


def cohens_h(p1: float, p2: float) -> float:
    """Effect size for a difference of two proportions."""
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0 or math.isnan(p):
            raise ValueError(f"proportion out of range: {p}")
    return 2.0 * math.asin(math.sqrt(p1)) - 2.0 * math.asin(math.sqrt(p2))


def cohens_d(diffs: Sequence[float]) -> float | None:
    """Mean over sample standard deviation. ``None`` when undefined
    (fewer than two values or zero variance)."""
    xs = [float(x) for x in diffs]
    if len(xs) < 2:
        return None
    mean = sum(xs) / len(xs)
    var = sum((x - mean) ** 2 for x in xs) / (len(xs) - 1)
    if var <= 1e-24:
        return None
    return mean / math.sqrt(var)


def _exact_sign_flip(xs: np.ndarray, observed: float) -> float:
    n = len(xs)
    hits = 0
    for signs in itertools.product((1.0, -1.0), repeat=n):
        if abs(float(np.dot(signs, xs))) / n >= observed - 1e-12:
            hits += 1
    return hits / 2 ** n


def permutation_test(diffs: Sequence[float], n_shuffles: int = 10000, seed: int = 0,
                     exact: bool | None = None) -> float:
    """Two-sided sign-flip test on paired differences.

    ``exact=None`` enumerates all sign patterns when there are no more of them
    than ``n_shuffles``; otherwise random flips are drawn and the p-value is
    ``(count + 1) / (n_shuffles + 1)``.
    """
    xs = np.asarray(diffs, dtype=float)
    if xs.size == 0:
        raise ValueError("need at least one difference")
    if n_shuffles < 1:
        raise ValueError("n_shuffles must be >= 1")
    observed = abs(float(xs.mean()))
    if observed == 0.0:
        return 1.0
    if exact is None:
        exact = 2 ** xs.size <= n_shuffles
    if exact:
        return _exact_sign_flip(xs, observed)
    rng = np.random.default_rng(seed)
    signs = rng.choice((-1.0, 1.0), size=(n_shuffles, xs.size))
    means = np.abs(signs @ xs) / xs.size
    count = int(np.sum(means >= observed - 1e-12))
    return (count + 1) / (n_shuffles + 1)


def mcnemar(wins_a: int, wins_b: int) -> float:
    """Exact two-sided binomial test on the discordant pairs."""
    if wins_a < 0 or wins_b < 0:
        raise ValueError("counts must be >= 0")
    n = wins_a + wins_b
    if n < 1:
        raise ValueError("need at least one discordant pair")
    tail = sum(math.comb(n, i) for i in range(min(wins_a, wins_b) + 1)) / 2 ** n
    return min(1.0, 2.0 * tail)
