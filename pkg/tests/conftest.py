"""Shared oracles for the test suite.

These deliberately take the slow, literal route (explicit double sums,
exhaustive enumeration, dense matrices) so they stay independent of the
recurrences and overlap formulas they are used to check.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest

from kcpd import Segmentation, as_signal


def direct_cost_matrix(signal, spec) -> np.ndarray:
    """C[s, e] = cost of [s, e) by summing the explicit Gram block."""
    sig = as_signal(signal)
    n = sig.n
    K = spec.gram(sig.data)
    C = np.full((n + 1, n + 1), np.nan)
    for s in range(n):
        for e in range(s + 1, n + 1):
            block = K[s:e, s:e]
            C[s, e] = np.trace(block) - block.sum() / (e - s)
    return C


def enumerate_start_tuples(n: int, d: int, ell: int = 1):
    """All 0-based internal start tuples of d segments with lengths >= ell."""
    if d * ell > n:
        return
    if d == 1:
        yield (0,)
        return
    # choose d-1 interior boundaries; gaps of at least ell on both sides
    for cuts in combinations(range(1, n), d - 1):
        prev = 0
        ok = True
        for c in cuts:
            if c - prev < ell:
                ok = False
                break
            prev = c
        if ok and n - prev >= ell:
            yield (0,) + cuts


def best_by_enumeration(signal, spec, d: int, ell: int = 1):
    """(loss, starts) of the optimal d-segmentation by exhaustive search.

    Exact loss ties resolve to the segmentation whose boundaries are
    smallest from the right, matching backtracking that picks the smallest
    boundary at each step.
    """
    sig = as_signal(signal)
    n = sig.n
    C = direct_cost_matrix(sig, spec)
    best = None
    best_key = None
    for starts in enumerate_start_tuples(n, d, ell):
        bounds = list(zip(starts, starts[1:] + (n,)))
        loss = sum(C[s, e] for s, e in bounds)
        key = (loss, tuple(reversed(starts)))
        if best is None or key < best_key:
            best = (loss, starts)
            best_key = key
    return best


def dense_membership(seg: Segmentation) -> np.ndarray:
    """The n-by-n block matrix of a segmentation, materialized."""
    M = np.zeros((seg.n, seg.n))
    for s, e in seg.bounds():
        M[s:e, s:e] = 1.0 / (e - s)
    return M


def random_signal(rng: np.random.Generator, n: int, q: int = 1, jumps: bool = True):
    """Noise plus a few mean shifts, the generic test input."""
    x = rng.normal(0.0, 1.0, (n, q))
    if jumps and n >= 6:
        k = rng.integers(1, 4)
        for _ in range(k):
            pos = int(rng.integers(1, n))
            x[pos:] += rng.normal(0.0, 2.0, q)
    return x


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
