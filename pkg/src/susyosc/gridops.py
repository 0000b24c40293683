"""Uniform-grid helpers: finite differences, Simpson weights, mask utilities.

Everything here assumes an equally spaced grid. Derivatives use five-point
central stencils (fourth order), which is what the residual checks elsewhere
in the package are calibrated against.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


def simpson_weights(n_points: int, h: float) -> np.ndarray:
    """Composite Simpson weights for an odd number of uniform nodes."""
    if n_points < 3 or n_points % 2 == 0:
        raise DomainError("Simpson weights need an odd node count >= 3, got %d" % n_points)
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    return w * (h / 3.0)


def deriv1(f: np.ndarray, h: float) -> np.ndarray:
    """Five-point first derivative; the two points at each end come back NaN."""
    out = np.full_like(np.asarray(f, dtype=float), np.nan)
    out[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    return out


def deriv2(f: np.ndarray, h: float) -> np.ndarray:
    """Five-point second derivative, NaN on the two-point boundary bands."""
    out = np.full_like(np.asarray(f, dtype=float), np.nan)
    out[2:-2] = (-f[:-4] + 16.0 * f[1:-3] - 30.0 * f[2:-2] + 16.0 * f[3:-1] - f[4:]) / (12.0 * h * h)
    return out


def cumtrapz(f: np.ndarray, h: float) -> np.ndarray:
    """Cumulative trapezoid antiderivative, anchored to zero at the first node."""
    out = np.zeros_like(np.asarray(f, dtype=float))
    out[1:] = np.cumsum((f[1:] + f[:-1]) * (0.5 * h))
    return out


def contiguous_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges [a, b) where mask is True."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate(([idx[0]], idx[breaks + 1]))
    ends = np.concatenate((idx[breaks] + 1, [idx[-1] + 1]))
    return list(zip(starts.tolist(), ends.tolist()))


def largest_run(mask: np.ndarray) -> tuple[int, int]:
    runs = contiguous_runs(mask)
    if not runs:
        raise DomainError("mask has no True entries")
    return max(runs, key=lambda r: r[1] - r[0])


def trapezoid_sum(f: np.ndarray, h: float) -> float:
    """Plain trapezoid integral over the whole array."""
    f = np.asarray(f, dtype=float)
    return float(h * (np.sum(f) - 0.5 * (f[0] + f[-1])))


def fill_gaps_poly(x: np.ndarray, f: np.ndarray, valid: np.ndarray,
                   degree: int = 5, side_points: int = 6) -> np.ndarray:
    """Fill interior gaps of f by local polynomial fits through the flanks.

    Gaps that touch the first or last valid run are left as NaN; only holes
    with enough valid neighbours on both sides are bridged. Used to carry a
    smooth quantity across windows that were masked for numerical reasons.
    """
    out = np.array(f, dtype=float, copy=True)
    runs = contiguous_runs(valid)
    for (a_end, b_start) in zip([r[1] for r in runs[:-1]], [r[0] for r in runs[1:]]):
        left = np.arange(max(0, a_end - side_points), a_end)
        right = np.arange(b_start, min(len(f), b_start + side_points))
        left = left[valid[left]]
        right = right[valid[right]]
        if len(left) < 2 or len(right) < 2:
            continue
        support = np.concatenate((left, right))
        deg = min(degree, len(support) - 1)
        x0 = x[support].mean()
        coef = np.polyfit(x[support] - x0, f[support], deg)
        hole = np.arange(a_end, b_start)
        out[hole] = np.polyval(coef, x[hole] - x0)
    return out
