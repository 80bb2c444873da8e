"""Optimal tracking of an observed trajectory by a topological reference system.

The infimum over initial states is realised exactly on each candidate set:
a min-cost path recursion over all admissible words for shifts of finite
type, a full grid plus one refinement round for circle rotations and their
fiber products, and a refined parameter grid for the identity system.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynsys import (
    CircleRotation,
    ConfigurationError,
    CustomCost,
    FiberProduct,
    HammingOnLabels,
    IdentityOnParams,
    NegLogDensity,
    RotationGrid,
    SubshiftSFT,
    sample,
)
from .search import direct_mismatches, grid_argmin, rotation_family_search, rotation_u_search

DEFAULT_RESOLUTION = 1000
SLACK = 1e-12
_EXACT_LIMIT = 2 ** 40


@dataclass(frozen=True)
class TrackingProblem:
    reference: object
    cost: object
    observed: np.ndarray
    candidate_resolution: int = DEFAULT_RESOLUTION
    threads: int = 1

    def __post_init__(self):
        obs = np.asarray(self.observed)
        if obs.ndim != 1 or len(obs) < 1:
            raise ConfigurationError("observed window must be a non-empty sequence")
        object.__setattr__(self, "observed", obs)


@dataclass
class TrackingResult:
    argmin_state: object
    value: float
    n: int
    status: str = "optimal"
    trace: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def state_id(state) -> str:
    """Stable text identifier of a candidate state for CSV output."""
    if isinstance(state, tuple) and all(isinstance(s, (int, np.integer)) for s in state):
        word = "".join(str(int(s)) for s in state)
        if len(word) <= 64:
            return word
        return "sha1:" + hashlib.sha1(word.encode()).hexdigest()[:16]
    if isinstance(state, tuple):
        return "theta=%s;u=%s" % tuple(_num_text(v) for v in state)
    if state is None:
        return ""
    return _num_text(state)


def _num_text(v) -> str:
    return str(v) if isinstance(v, Fraction) else "%.17g" % float(v)


# --------------------------------------------------------------------------
# cost tables
# --------------------------------------------------------------------------

def _symbol_table(reference: SubshiftSFT, cost, ay: int) -> np.ndarray:
    if isinstance(cost, (HammingOnLabels, CustomCost)):
        return cost.table(reference.alphabet_size, ay)
    raise ConfigurationError(f"{type(cost).__name__} is not defined on shift symbols")


def _require_hamming(reference, cost):
    if not isinstance(cost, HammingOnLabels):
        raise ConfigurationError(f"{type(reference).__name__} references support Hamming cost only")


def _require_two_cells(reference):
    if not reference.partition.is_default:
        raise ConfigurationError("rotation tracking is implemented for the two-cell partition")


def _param_cost_fn(cost, y):
    if isinstance(cost, NegLogDensity):
        return lambda theta: float(np.mean(cost(theta, y)))
    if callable(cost):
        return lambda theta: float(np.mean(cost(theta, y)))
    raise ConfigurationError(f"{type(cost).__name__} cannot be evaluated on parameters")


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def empirical_cost(reference, cost, x, y_window) -> float:
    """(1/n) sum_k c(S^k x, y_k) for the window length n; +inf propagates."""
    y = np.asarray(y_window)
    n = len(y)
    if n < 1:
        raise ValueError("window length must be at least 1")
    if isinstance(reference, SubshiftSFT):
        word = tuple(int(s) for s in x)
        if len(word) >= n:
            if not reference.is_admissible(word[:n]):
                raise ConfigurationError("word is not admissible in the shift")
            seq = np.array(word[:n])
        else:
            reference.check_state(word)
            seq = np.array([word[k % len(word)] for k in range(n)])
        table = _symbol_table(reference, cost, int(y.max()) + 1)
        return float(np.mean(table[seq, y.astype(int)]))
    if isinstance(reference, CircleRotation):
        _require_hamming(reference, cost)
        reference.check_state(x)
        return hamming_risk(reference.angle, x, y)
    if isinstance(reference, FiberProduct):
        _require_hamming(reference, cost)
        reference.check_state(x)
        return hamming_risk(x[0], x[1], y)
    if isinstance(reference, IdentityOnParams):
        reference.check_state(x)
        return _param_cost_fn(cost, y)(x)
    raise ConfigurationError(f"unsupported reference {type(reference).__name__}")


def hamming_risk(theta, u, observed) -> float:
    """Fraction of k < n where the rotation label of u + k theta differs from y_k.

    Exact in integer arithmetic when theta and u are rationals.
    """
    y = np.asarray(observed, dtype=np.uint8)
    if len(y) < 1:
        raise ValueError("window length must be at least 1")
    return direct_mismatches(theta, u, y) / len(y)


def block_minimum(reference: SubshiftSFT, cost, y) -> tuple[float, tuple]:
    """G_n(y): the minimal total cost over admissible words, and the smallest minimiser."""
    y = np.asarray(y, dtype=np.int64)
    table = _symbol_table(reference, cost, int(y.max()) + 1)
    C = np.ascontiguousarray(table[:, y].T, dtype=np.float64)
    total, word = kernels.sft_min_cost_path(
        np.ascontiguousarray(reference.matrix, dtype=np.uint8), C,
        np.ascontiguousarray(reference.alive(), dtype=np.uint8))
    return float(total), tuple(int(s) for s in word)


def optimal_tracking(problem: TrackingProblem) -> TrackingResult:
    """Exact minimiser of the empirical cost over the reference's candidate set."""
    ref, cost, y = problem.reference, problem.cost, problem.observed
    n = len(y)
    if isinstance(ref, SubshiftSFT):
        total, word = block_minimum(ref, cost, y)
        if not math.isfinite(total):
            return TrackingResult(None, math.inf, n, status="infeasible")
        return TrackingResult(word, total / n, n, trace={"candidates": "all admissible words"})

    if isinstance(ref, CircleRotation):
        _require_hamming(ref, cost)
        _require_two_cells(ref)
        res = problem.candidate_resolution
        if isinstance(ref.angle, Fraction) and ref.angle.denominator * res < _EXACT_LIMIT:
            fit = rotation_family_search(y, RotationGrid.single(ref.angle, res), refine=True)
            return TrackingResult(fit.u, fit.risk, n, trace={"resolution": res, "coarse_u": fit.coarse_u})
        u, cnt = rotation_u_search(ref.angle, y, res, refine=True)
        return TrackingResult(u, cnt / n, n, trace={"resolution": res})

    if isinstance(ref, FiberProduct):
        _require_hamming(ref, cost)
        _require_two_cells(ref)
        fit = rotation_family_search(y, ref.grid, refine=ref.refine, threads=problem.threads)
        return TrackingResult((fit.theta, fit.u), fit.risk, n,
                              trace={"coarse_theta": fit.coarse_theta, "coarse_u": fit.coarse_u,
                                     "coarse_value": fit.coarse_mismatches / n})

    if isinstance(ref, IdentityOnParams):
        fn = _param_cost_fn(cost, y)
        theta, value, th_c, v_c = grid_argmin(fn, ref.grid, refine=ref.refine, threads=problem.threads)
        if not math.isfinite(value):
            return TrackingResult(None, math.inf, n, status="infeasible")
        return TrackingResult(theta, value, n, trace={"coarse_theta": th_c, "coarse_value": v_c})

    raise ConfigurationError(f"unsupported reference {type(ref).__name__}")


def superadditivity_check(reference: SubshiftSFT, cost, y, m: int, n: int) -> bool:
    """Whether G_{m+n}(y) >= G_m(y) + G_n(T^m y) up to 1e-12 relative slack."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    y = np.asarray(y)
    if len(y) < m + n:
        raise ValueError(f"trajectory of length {len(y)} is shorter than m + n = {m + n}")
    g_mn, _ = block_minimum(reference, cost, y[: m + n])
    g_m, _ = block_minimum(reference, cost, y[:m])
    g_n, _ = block_minimum(reference, cost, y[m: m + n])
    return g_mn - (g_m + g_n) >= -SLACK * max(1.0, abs(g_mn))


def phi_estimate(result: TrackingResult, reference=None):
    """Project the tracked state onto its invariant parameter coordinate."""
    state = result.argmin_state
    if reference is not None and not isinstance(reference, (FiberProduct, IdentityOnParams)):
        raise ConfigurationError(f"{type(reference).__name__} has no invariant parameter coordinate")
    if isinstance(state, tuple) and len(state) == 2 and not isinstance(state[0], (int, np.integer)):
        return state[0]
    if isinstance(state, (float, Fraction)):
        return state
    raise ConfigurationError("tracked state has no invariant parameter coordinate")


@dataclass
class EstimatorTrace:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    HEADER = ("n", "argmin_id", "theta_hat", "value")

    def append(self, n: int, result: TrackingResult, theta_hat=None):
        if self.rows and n <= self.rows[-1][0]:
            raise ValueError("trace rows must have strictly increasing n")
        self.rows.append((n, state_id(result.argmin_state), theta_hat, result.value))

    @property
    def values(self) -> list:
        return [r[3] for r in self.rows]

    @property
    def thetas(self) -> list:
        return [r[2] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.HEADER)
        for n, aid, th, v in self.rows:
            w.writerow([n, aid, "" if th is None else "%.17g" % float(th), "%.17g" % v])
        return buf.getvalue()


def track_limit_estimate(reference, cost, source, n_schedule, candidate_resolution: int = DEFAULT_RESOLUTION,
                         threads: int = 1) -> EstimatorTrace:
    """Track growing prefixes of one sampled trajectory."""
    schedule = [int(n) for n in n_schedule]
    if not schedule or any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigurationError("n schedule must be non-empty and strictly increasing")
    y = sample(source, schedule[-1])
    trace = EstimatorTrace(metadata={"seed": getattr(source, "seed", None),
                                     "resolution": candidate_resolution})
    has_phi = isinstance(reference, (FiberProduct, IdentityOnParams))
    for n in schedule:
        res = optimal_tracking(TrackingProblem(reference, cost, y[:n], candidate_resolution, threads))
        theta = phi_estimate(res, reference) if has_phi and res.feasible else None
        trace.append(n, res, theta)
    return trace
