"""Maximum likelihood on a parameter grid from one ergodic sample path.

The estimate is the argmin of the average negative log-likelihood, which is
the tracking problem for the identity map on the parameter set with cost
-log p_theta(u). Both routes evaluate the same elementwise densities, so
they select the same grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynsys import ConfigurationError, IdentityOnParams, NegLogDensity, rng_stream, uniform_grid
from .search import grid_argmin
from .tracking import TrackingProblem, optimal_tracking

LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class BernoulliFamily:
    """p_theta(1) = theta, p_theta(0) = 1 - theta on {0, 1}."""

    grid: tuple = field(default_factory=lambda: uniform_grid(0.0, 1.0, 1001))
    refine: bool = True

    def __post_init__(self):
        _check_grid(self.grid, 0.0, 1.0)

    def log_density(self, theta, u):
        u = np.asarray(u)
        with np.errstate(divide="ignore"):
            return np.where(u != 0, np.log(theta), np.log1p(-theta))


@dataclass(frozen=True)
class GaussianLocation:
    """Unit-variance normal density with mean theta."""

    grid: tuple = field(default_factory=lambda: uniform_grid(-2.0, 2.0, 401))
    refine: bool = True

    def __post_init__(self):
        _check_grid(self.grid, -math.inf, math.inf)

    def log_density(self, theta, u):
        d = np.asarray(u, dtype=np.float64) - theta
        return -0.5 * d * d - LOG_SQRT_2PI


DensityFamily = BernoulliFamily | GaussianLocation


def _check_grid(grid, lo, hi):
    g = [float(v) for v in grid]
    if not g or g != sorted(g) or g[0] < lo or g[-1] > hi:
        raise ConfigurationError(f"parameter grid must be sorted, non-empty and inside [{lo}, {hi}]")


@dataclass(frozen=True)
class GaussianIID:
    """i.i.d. N(mean, 1) sample source."""

    mean: float = 0.0
    seed: int = 0

    def draw(self, n: int) -> np.ndarray:
        return rng_stream(self.seed).standard_normal(n) + float(self.mean)


def empirical_loglik(family, theta: float, sample) -> float:
    """(1/n) sum log p_theta(U_i); -inf when any term is -inf."""
    u = np.asarray(sample)
    if len(u) == 0:
        raise ValueError("sample must be non-empty")
    return float(np.mean(family.log_density(theta, u)))


@dataclass
class MLEResult:
    n: list
    theta_hat: list
    loglik: list
    target: tuple | None = None
    status: str = "optimal"

    @property
    def final(self):
        return self.theta_hat[-1]


def _fit(family, u, threads):
    cost = lambda th: -empirical_loglik(family, th, u)  # noqa: E731
    theta, value, _, _ = grid_argmin(cost, family.grid, refine=family.refine, threads=threads)
    return theta, -value


def mle_estimate(family, sample, schedule=None, target=None, threads: int | None = None) -> MLEResult:
    """Grid argmax of the log-likelihood on each prefix length in ``schedule``.

    Ties go to the smallest parameter. If every grid value is -inf the
    result has status ``"degenerate"`` and no estimate for that prefix.
    """
    u = np.asarray(sample)
    ns = [len(u)] if schedule is None else [int(n) for n in schedule]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1 or ns[-1] > len(u):
        raise ConfigurationError("schedule must be increasing within the sample length")
    out = MLEResult([], [], [], target)
    for n in ns:
        theta, ll = _fit(family, u[:n], threads)
        out.n.append(n)
        if not math.isfinite(ll):
            out.theta_hat.append(None)
            out.status = "degenerate"
        else:
            out.theta_hat.append(theta)
        out.loglik.append(ll)
    return out


def tracking_route(family, sample, schedule, threads: int | None = None) -> list:
    """The same estimates obtained through the generic tracking engine."""
    ref = IdentityOnParams(family.grid, refine=family.refine)
    cost = NegLogDensity(family)
    u = np.asarray(sample)
    out = []
    for n in schedule:
        res = optimal_tracking(TrackingProblem(ref, cost, u[:n], threads=threads or 1))
        out.append(res.argmin_state if res.feasible else None)
    return out


def target_set(family, marginal_mean: float) -> tuple:
    """KL-optimal parameter set: the marginal mean, clamped to the grid range."""
    if not isinstance(family, (BernoulliFamily, GaussianLocation)):
        raise ConfigurationError(f"no closed-form target for {type(family).__name__}")
    lo, hi = float(family.grid[0]), float(family.grid[-1])
    return (min(max(float(marginal_mean), lo), hi),)
