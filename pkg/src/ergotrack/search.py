"""Deterministic grid searches shared by the tracking engine and the estimators.

Refinement policy, used everywhere: one round on a 100x finer grid spanning
one coarse step either side of the coarse argmin; the refined point replaces
the coarse one only when it is strictly better. Ties break toward the
smallest parameter, then the smallest initial point.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .dynsys import RotationGrid, frac, uniform_grid

REFINE_FACTOR = 100


def thread_count(requested: int | None = None) -> int:
    """``ERGOTRACK_THREADS`` overrides the requested count."""
    env = os.environ.get("ERGOTRACK_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(requested or 1))


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Ordered map; results do not depend on the worker count."""
    items = list(items)
    t = thread_count(threads)
    if t == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=t) as pool:
        return list(pool.map(fn, items))


def refined_window(grid, center: float, lo: float | None = None, hi: float | None = None) -> list:
    """Points of the 100x finer grid within one coarse step of ``center``."""
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        return [float(center)]
    step = float(np.min(np.diff(grid)))
    lo = grid[0] if lo is None else lo
    hi = grid[-1] if hi is None else hi
    pts = uniform_grid(center - step, center + step, 2 * REFINE_FACTOR + 1)
    return [p for p in pts if lo <= p <= hi]


def first_argmin(values) -> int:
    """Index of the first minimum; NaN counts as +inf."""
    v = np.asarray(values, dtype=float)
    v = np.where(np.isnan(v), np.inf, v)
    return int(np.argmin(v))


@dataclass(frozen=True)
class RotationFit:
    theta: Fraction
    u: Fraction
    mismatches: int
    n: int
    coarse_theta: Fraction
    coarse_u: Fraction
    coarse_mismatches: int
    refined: bool

    @property
    def risk(self) -> float:
        return self.mismatches / self.n


def _u_scan(a: int, dth: int, y: np.ndarray, u_den: int) -> tuple[int, int]:
    counts = kernels.rotation_mismatch_counts_exact(a, dth, 0, u_den, u_den, y)
    j = int(np.argmin(counts))
    return int(counts[j]), j


def _theta_scan(nums, dth, y, u_den, threads):
    res = parallel_map(lambda a: _u_scan(a, dth, y, u_den), nums, threads)
    return np.array([c for c, _ in res], dtype=np.int64), [j for _, j in res]


def rotation_family_search(y, grid: RotationGrid, refine: bool = True,
                           threads: int | None = None) -> RotationFit:
    """Minimise the Hamming risk of rotation codings over a theta x u lattice.

    The coarse pass scans the full u grid for every theta. Refinement scans
    theta on the 100x finer lattice within one coarse step, again against the
    full u grid, then refines u within one coarse u-step of the best point.
    """
    y = np.ascontiguousarray(y, dtype=np.uint8)
    n = len(y)
    D, M = grid.theta_den, grid.u_den
    nums = list(range(grid.theta_lo, grid.theta_hi + 1))
    counts, idx = _theta_scan(nums, D, y, M, threads)
    i = int(np.argmin(counts))
    th_c, u_c, cnt_c = Fraction(nums[i], D), Fraction(idx[i], M), int(counts[i])
    best = (th_c, u_c, cnt_c)
    if refine and cnt_c > 0:
        R = REFINE_FACTOR
        Dr = R * D
        if grid.size > 1:
            centre = nums[i] * R
            fine = [a for a in range(centre - R, centre + R + 1) if 0 <= a and 2 * a <= Dr]
        else:
            fine = [nums[i] * R]
        fcounts, fidx = _theta_scan(fine, Dr, y, M, threads)
        r = int(np.argmin(fcounts))
        Mr = R * M
        b0 = (fidx[r] * R - R) % Mr
        uc = kernels.rotation_mismatch_counts_exact(fine[r], Dr, b0, Mr, min(2 * R + 1, Mr), y)
        us = [(b0 + j) % Mr for j in range(len(uc))]
        j = int(np.lexsort((np.array(us), np.asarray(uc)))[0])
        if int(uc[j]) < cnt_c:
            best = (Fraction(fine[r], Dr), Fraction(us[j], Mr), int(uc[j]))
    return RotationFit(theta=best[0], u=best[1], mismatches=best[2], n=n, coarse_theta=th_c,
                       coarse_u=u_c, coarse_mismatches=cnt_c, refined=best[2] < cnt_c)


def rotation_u_search(theta: float, y, u_points: int = 1000, refine: bool = True) -> tuple[float, int]:
    """Best initial point for a fixed non-lattice angle.

    Returns ``(u, mismatches)``; the count is recomputed directly at the chosen
    point so it matches an independent evaluation.
    """
    y = np.ascontiguousarray(y, dtype=np.uint8)
    counts = kernels.rotation_mismatch_counts(float(theta), 0.0, float(u_points), u_points, y)
    j = int(np.argmin(counts))
    u, cnt = j / u_points, int(counts[j])
    if refine and cnt > 0:
        R = REFINE_FACTOR
        u0 = frac((j - 1) / u_points)
        uc = kernels.rotation_mismatch_counts(float(theta), u0, float(R * u_points), 2 * R + 1, y)
        us = np.array([frac(u0 + k / (R * u_points)) for k in range(len(uc))])
        k = int(np.lexsort((us, np.asarray(uc)))[0])
        if int(uc[k]) < cnt:
            u = float(us[k])
    return u, direct_mismatches(theta, u, y)


def direct_mismatches(theta, u, y) -> int:
    """Mismatch count of the rotation coding from u against y, by direct evaluation.

    Rational inputs are evaluated in integer arithmetic; otherwise in floats.
    """
    y = np.asarray(y, dtype=np.uint8)
    n = len(y)
    if isinstance(theta, (Fraction, int)) and isinstance(u, (Fraction, int)):
        theta, u = Fraction(theta), Fraction(u)
        D = math.lcm(theta.denominator, u.denominator)
        un, tn = u.numerator * (D // u.denominator), theta.numerator * (D // theta.denominator)
        dtype = np.int64 if n * D < 2 ** 62 and abs(un) < 2 ** 62 else object
        pos = (un + np.arange(n, dtype=dtype) * tn) % D
        lab = (2 * pos >= D).astype(np.uint8)
    else:
        t = float(u) + np.arange(n, dtype=np.float64) * float(theta)
        lab = ((t - np.floor(t)) >= 0.5).astype(np.uint8)
    return int(np.count_nonzero(lab != y))


def grid_argmin(fn, grid, refine: bool = True, threads: int | None = None):
    """Argmin of a scalar function over a sorted grid with one refinement round.

    Returns ``(theta, value, coarse_theta, coarse_value)``; +inf values are
    allowed, and an all-infinite grid returns value +inf.
    """
    grid = [float(g) for g in grid]
    vals = parallel_map(fn, grid, threads)
    i = first_argmin(vals)
    th_c, v_c = grid[i], float(vals[i])
    best = (th_c, v_c)
    if refine and np.isfinite(v_c):
        fine = refined_window(grid, th_c)
        fvals = parallel_map(fn, fine, threads)
        r = first_argmin(fvals)
        if fvals[r] < v_c:
            best = (fine[r], float(fvals[r]))
    return best[0], best[1], th_c, v_c
