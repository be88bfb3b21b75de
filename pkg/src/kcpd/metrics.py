"""Segmentation quality measures.

A segmentation tau corresponds to the n-by-n block matrix with value
1/len(block) on the diagonal block of each segment and zero elsewhere; its
squared Frobenius norm equals the number of segments. Distances between
such matrices reduce to segment-overlap sums, so nothing quadratic in n is
ever materialized.
"""

from __future__ import annotations

import numpy as np

from .exact_dp import Segmentation
from .kernels import as_signal

__all__ = [
    "frobenius_distance",
    "membership_norm_sq",
    "piecewise_mean_fit",
    "empirical_risk",
]


def _overlap_sum(a: Segmentation, b: Segmentation) -> float:
    """sum over segment pairs of |intersection|^2 / (len_a * len_b)."""
    total = 0.0
    bb = b.bounds()
    j = 0
    for sa, ea in a.bounds():
        while bb[j][1] <= sa:
            j += 1
        k = j
        while k < len(bb) and bb[k][0] < ea:
            sb, eb = bb[k]
            ov = min(ea, eb) - max(sa, sb)
            total += (ov * ov) / ((ea - sa) * (eb - sb))
            k += 1
    return total


def frobenius_distance(a: Segmentation, b: Segmentation) -> float:
    """Frobenius distance between the block matrices of two segmentations.

    d^2 = D_a + D_b - 2 * sum_{k,k'} |seg_k cap seg_k'|^2 / (len_k len_k'),
    computed from segment overlaps in O(D_a + D_b).
    """
    if a.n != b.n:
        raise ValueError(f"segmentations cover different lengths: {a.n} vs {b.n}")
    d2 = a.d + b.d - 2.0 * _overlap_sum(a, b)
    return float(np.sqrt(max(d2, 0.0)))


def membership_norm_sq(seg: Segmentation) -> float:
    """Squared Frobenius norm of the block matrix; equals the segment count."""
    return _overlap_sum(seg, seg)


def piecewise_mean_fit(x, seg: Segmentation) -> np.ndarray:
    """Per-point fitted values: each point gets its segment mean.

    ``x`` is a univariate signal (or one coordinate of one).
    """
    sig = as_signal(x)
    if sig.q != 1:
        raise ValueError("piecewise mean fit expects a single coordinate")
    if sig.n != seg.n:
        raise ValueError(f"signal length {sig.n} does not match segmentation over {seg.n}")
    v = sig.data[:, 0]
    out = np.empty_like(v)
    for s, e in seg.bounds():
        out[s:e] = v[s:e].mean()
    return out


def empirical_risk(estimate, truth) -> float:
    """Mean squared gap between fitted values and the regression function."""
    f_hat = np.asarray(estimate, dtype=np.float64)
    f = np.asarray(truth, dtype=np.float64)
    if f_hat.shape != f.shape:
        raise ValueError(f"length mismatch: {f_hat.shape} vs {f.shape}")
    d = f_hat - f
    return float((d * d).mean())
