"""Identification of a rotation angle from quantized, noisy labels.

Label runs, the Hamming-risk estimator over rotation families, exact
block-complexity counting, the noise-floor comparison and the separation
horizon for two nearby angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynsys import (
    DEFAULT_PARTITION,
    HALF,
    CircleRotation,
    ConfigurationError,
    HammingOnLabels,
    NoisyLabelChannel,
    Partition,
    RotationGrid,
    RotationOrbit,
    as_number,
)
from .search import rotation_family_search
from .tracking import TrackingProblem, hamming_risk, optimal_tracking

__all__ = [
    "RotationFamily", "NoisyLabelRun", "ThetaEstimate", "BlockComplexityReport", "DbarReport",
    "SeparationReport", "generate", "hamming_risk", "estimate_theta", "block_complexity",
    "dbar_floor_check", "separation_bound", "COMPLEXITY_CAP",
]

COMPLEXITY_CAP = 64


@dataclass(frozen=True)
class RotationFamily:
    """Rotations R_theta on a rational (theta, u) lattice with a two-cell labelling."""

    grid: RotationGrid
    partition: Partition = DEFAULT_PARTITION
    refine: bool = True

    @classmethod
    def from_spacing(cls, theta_step="1e-4", u_step="1e-3", lo=0, hi=HALF, refine=True):
        return cls(RotationGrid.from_spacing(theta_step, u_step, lo, hi), refine=refine)

    @property
    def theta_spacing(self) -> Fraction:
        return Fraction(1, self.grid.theta_den)

    @property
    def u_spacing(self) -> Fraction:
        return Fraction(1, self.grid.u_den)


@dataclass(frozen=True)
class NoisyLabelRun:
    theta_star: float | Fraction
    p: float
    n: int
    seed: int
    u: float | Fraction
    observed: np.ndarray = field(repr=False)
    clean: np.ndarray = field(repr=False)


def generate(theta_star, p, n: int, seed: int, u=None) -> NoisyLabelRun:
    """Labels of the rotation orbit from U, each flipped independently with probability p.

    U is drawn from the seed (uniform on [0, 1) for float angles, uniform on the
    orbit of 0 for Fraction angles) unless given. Runs sharing a seed share U,
    so a p = 0 run is the clean version of any noisy run with the same seed.
    """
    p = as_number(p)
    if not 0 <= p < HALF:
        raise ConfigurationError(f"flip probability {p} outside [0, 1/2)")
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    base = RotationOrbit(theta_star, u=u, seed=seed)
    channel = NoisyLabelChannel(base, p, seed)
    clean = channel.clean(n)
    flips = channel.flips(n)
    return NoisyLabelRun(base.angle, p, n, seed, base.initial_point(), clean ^ flips, clean)


@dataclass(frozen=True)
class ThetaEstimate:
    theta_hat: Fraction
    u_hat: Fraction
    min_risk: float
    coarse_theta: Fraction
    coarse_risk: float
    n: int


def estimate_theta(observed, family: RotationFamily, threads: int | None = None) -> ThetaEstimate:
    """Minimum Hamming risk over the family, ties to the smallest theta then u."""
    if not family.partition.is_default:
        raise ConfigurationError("estimation is implemented for the two-cell partition")
    y = np.asarray(observed, dtype=np.uint8)
    fit = rotation_family_search(y, family.grid, refine=family.refine, threads=threads)
    return ThetaEstimate(fit.theta, fit.u, fit.risk, fit.coarse_theta, fit.coarse_mismatches / fit.n, fit.n)


# --------------------------------------------------------------------------
# block complexity
# --------------------------------------------------------------------------

@dataclass
class BlockComplexityReport:
    counts: list
    entropy_estimates: list
    exponent: float
    thetas: int

    def zero_entropy_gate(self, threshold: float = 0.2) -> bool:
        """Whether log C(n)/n at the largest n is at most ``threshold``."""
        return self.entropy_estimates[-1][1] <= threshold

    def entropy_decreasing_from(self, n0: int) -> bool:
        vals = [h for n, h in self.entropy_estimates if n >= n0]
        return all(b < a for a, b in zip(vals, vals[1:]))


def _theta_words(theta: Fraction, n: int) -> np.ndarray:
    """Distinct label words of length n (bit k = label k) over all u, for one angle.

    The word is constant on each arc between consecutive pulled-back endpoints
    {-k theta, 1/2 - k theta}; arcs are closed on the left, so their left ends
    are complete representatives.
    """
    a, b = theta.numerator, theta.denominator
    D = 2 * b
    k = np.arange(n, dtype=object if n * D >= 2 ** 62 else np.int64)
    shift = (2 * a * k) % D
    reps = np.unique(np.concatenate([(-shift) % D, (b - shift) % D]))
    pos = (reps[:, None] + shift[None, :]) % D
    bits = (pos >= b).astype(np.uint64)
    return np.unique((bits << np.arange(n, dtype=np.uint64)[None, :]).sum(axis=1, dtype=np.uint64))


def block_complexity(thetas, n_max: int, cap: int = COMPLEXITY_CAP) -> BlockComplexityReport:
    """Number of distinct label n-blocks, n = 1..n_max, over the union of the given angles.

    ``thetas`` may be a ``RotationFamily``, a ``RotationGrid`` or a list of
    rationals. Counts per angle are exact; the union is over the sample.
    """
    if n_max < 1:
        raise ConfigurationError("n_max must be at least 1")
    if n_max > min(cap, COMPLEXITY_CAP):
        raise ConfigurationError(f"n_max={n_max} exceeds the cap {min(cap, COMPLEXITY_CAP)}")
    if isinstance(thetas, RotationFamily):
        thetas = thetas.grid
    if isinstance(thetas, RotationGrid):
        thetas = thetas.thetas()
    angles = [Fraction(str(t)) if isinstance(t, float) else Fraction(t) for t in thetas]
    if not angles:
        raise ConfigurationError("need at least one angle")
    words = np.unique(np.concatenate([_theta_words(t, n_max) for t in angles]))
    counts = []
    for n in range(1, n_max + 1):
        mask = np.uint64((1 << n) - 1) if n < 64 else np.uint64(2 ** 64 - 1)
        counts.append((n, int(len(np.unique(words & mask)))))
    entropy = [(n, math.log(c) / n) for n, c in counts]
    ns = np.array([n for n, _ in counts], dtype=float)
    cs = np.array([c for _, c in counts], dtype=float)
    exponent = float(np.polyfit(np.log(ns), np.log(cs), 1)[0]) if n_max > 1 else 0.0
    return BlockComplexityReport(counts, entropy, exponent, len(angles))


# --------------------------------------------------------------------------
# noise floor
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DbarReport:
    theta_probe: float | Fraction
    p: float
    noisy_risk: float
    clean_risk: float
    bound: float
    tolerance: float

    @property
    def slack(self) -> float:
        return self.noisy_risk - self.bound

    @property
    def holds(self) -> bool:
        return self.slack >= -self.tolerance


def _min_risk_fixed_theta(theta, y, resolution: int) -> float:
    return optimal_tracking(TrackingProblem(CircleRotation(theta), HammingOnLabels(), y, resolution)).value


def dbar_floor_check(family: RotationFamily, run: NoisyLabelRun, theta_probe,
                     tolerance: float = 0.02) -> DbarReport:
    """Compare the noisy min-risk at ``theta_probe`` with p + (1 - 2p) times the clean one.

    Both minima are over initial points on the family's u lattice plus one
    refinement; the clean run shares U with the noisy one.
    """
    theta = as_number(theta_probe)
    if isinstance(theta, float):
        theta = Fraction(str(theta_probe))
    res = family.grid.u_den
    noisy = _min_risk_fixed_theta(theta, run.observed, res)
    clean = _min_risk_fixed_theta(theta, run.clean, res)
    p = float(run.p)
    return DbarReport(theta, p, noisy, clean, p + (1 - 2 * p) * clean, tolerance)


# --------------------------------------------------------------------------
# separation horizon
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationReport:
    N: int
    counterexamples: int
    checked: int
    grid: tuple

    @property
    def verified(self) -> bool:
        return self.counterexamples == 0


def _exact(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def separation_bound(alpha1, alpha2, epsilon, grid=(200, 200, 21), verify: bool = True) -> SeparationReport:
    """Horizon N = ceil(3 / (2 (alpha2 - alpha1 - epsilon))) and a grid check of separation.

    The check counts triples (u, v, alpha) with alpha within epsilon of alpha2
    for which the codings of u under alpha and of v under alpha1 agree at every
    k = 0..N. Arithmetic is exact on the rational lattice.
    """
    a1, a2, eps = _exact(alpha1), _exact(alpha2), _exact(epsilon)
    if not 0 <= a1 < a2 <= HALF:
        raise ConfigurationError("need 0 <= alpha1 < alpha2 <= 1/2")
    if not 0 < eps < (a2 - a1) / 2:
        raise ConfigurationError(f"epsilon {epsilon} outside (0, (alpha2 - alpha1)/2)")
    N = math.ceil(Fraction(3) / (2 * (a2 - a1 - eps)))
    nu, nv, na = grid
    if not verify:
        return SeparationReport(N, -1, 0, tuple(grid))
    alphas = [a2 - eps + 2 * eps * i / (na - 1) for i in range(na)] if na > 1 else [a2]
    L = math.lcm(2 * nu, 2 * nv, a1.denominator, *(a.denominator for a in alphas))
    k = np.arange(N + 1, dtype=object)

    def codes(start_den, count, alpha):
        start = np.arange(count, dtype=object) * (L // start_den)
        pos = (start[:, None] + k[None, :] * (alpha.numerator * (L // alpha.denominator))) % L
        bits = (2 * pos >= L).astype(np.uint8)
        return [row.tobytes() for row in bits]

    v_codes = {}
    for c in codes(nv, nv, a1):
        v_codes[c] = v_codes.get(c, 0) + 1
    bad = 0
    for alpha in alphas:
        bad += sum(v_codes.get(c, 0) for c in codes(nu, nu, alpha))
    return SeparationReport(N, bad, nu * nv * na, tuple(grid))
