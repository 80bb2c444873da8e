"""Reference systems, observation sources, partitions and cost functions.

Every object here is an immutable dataclass. Randomness only enters through
``sample``, which derives a counter-based Philox stream from the source seed.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

HALF = Fraction(1, 2)


class ConfigurationError(ValueError):
    """Raised for malformed systems, sources or problem definitions."""


class InvalidStateError(ValueError):
    """Raised when a state does not belong to the reference system."""


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, *keys)``; independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def frac(x):
    """x mod 1; exact for Fractions."""
    return x - math.floor(x)


def as_number(value):
    """Parse ``"1/4"`` or ``"0.25"`` style strings; ints and Fractions pass through."""
    if isinstance(value, (Fraction, int)):
        return value
    if isinstance(value, float):
        return value
    text = str(value).strip()
    if "/" in text:
        return Fraction(text)
    return float(text)


# --------------------------------------------------------------------------
# partitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Half-open cells ``[lo, hi)`` covering [0, 1) in order."""

    cells: tuple = ((Fraction(0), HALF), (HALF, Fraction(1)))

    def __post_init__(self):
        cells = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.cells)
        if not cells:
            raise ConfigurationError("partition needs at least one cell")
        if cells[0][0] != 0 or cells[-1][1] != 1:
            raise ConfigurationError("partition cells must start at 0 and end at 1")
        for (lo, hi), (lo2, _) in zip(cells, cells[1:] + ((Fraction(1), None),)):
            if not lo < hi:
                raise ConfigurationError(f"empty cell [{lo}, {hi})")
            if hi != lo2:
                raise ConfigurationError(f"cells must be contiguous; gap or overlap at {hi}")
        object.__setattr__(self, "cells", cells)

    @property
    def left_edges(self) -> np.ndarray:
        return np.array([float(lo) for lo, _ in self.cells])

    def label(self, x) -> int:
        if not 0 <= x < 1:
            raise ValueError(f"point {x} outside [0, 1)")
        for j, (lo, hi) in enumerate(self.cells):
            if lo <= x < hi:
                return j
        raise AssertionError("unreachable")

    @property
    def is_default(self) -> bool:
        return self.cells == Partition().cells


DEFAULT_PARTITION = Partition()


def quantize(partition: Partition, trajectory) -> np.ndarray:
    """Cell index of every point; boundaries belong to the cell on their right."""
    pts = list(trajectory)
    if any(isinstance(p, Fraction) for p in pts):
        return np.array([partition.label(p) for p in pts], dtype=np.uint8)
    arr = np.asarray(pts, dtype=np.float64)
    bad = (arr < 0) | (arr >= 1) | ~np.isfinite(arr)
    if bad.any():
        raise ValueError(f"point {arr[bad][0]} outside [0, 1)")
    return (np.searchsorted(partition.left_edges, arr, side="right") - 1).astype(np.uint8)


def half_labels(positions: np.ndarray) -> np.ndarray:
    """Default two-cell labels of points already reduced mod 1."""
    return (positions >= 0.5).astype(np.uint8)


# --------------------------------------------------------------------------
# topological reference systems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CircleRotation:
    """x -> x + angle mod 1 with angle in [0, 1/2]; Fraction angles stay exact."""

    angle: float | Fraction = 0.0
    partition: Partition = DEFAULT_PARTITION

    def __post_init__(self):
        if not 0 <= self.angle <= HALF:
            raise ConfigurationError(f"rotation angle {self.angle} outside [0, 1/2]")

    def step(self, x):
        return frac(x + self.angle)

    def check_state(self, x):
        if not 0 <= x < 1:
            raise InvalidStateError(f"circle state {x} outside [0, 1)")


@dataclass(frozen=True)
class SubshiftSFT:
    """One-sided vertex shift on ``{0..a-1}``; ``adjacency[i][j]`` allows i -> j.

    States are finite words read as periodic points, so the word must be
    admissible including the wrap-around transition.
    """

    adjacency: tuple

    def __post_init__(self):
        adj = tuple(tuple(bool(v) for v in row) for row in self.adjacency)
        a = len(adj)
        if a == 0 or any(len(row) != a for row in adj):
            raise ConfigurationError("adjacency must be a non-empty square matrix")
        object.__setattr__(self, "adjacency", adj)
        if not self.alive().any():
            raise ConfigurationError("adjacency has no cycle; the shift space is empty")

    @property
    def alphabet_size(self) -> int:
        return len(self.adjacency)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=bool)

    def alive(self) -> np.ndarray:
        """Symbols that start an infinite admissible path."""
        adj = self.matrix
        alive = np.ones(len(adj), dtype=bool)
        while True:
            keep = alive & (adj & alive[None, :]).any(axis=1)
            if (keep == alive).all():
                return keep
            alive = keep

    def is_admissible(self, word: Sequence[int], cyclic: bool = False) -> bool:
        alive = self.alive()
        if not word or any(not 0 <= s < self.alphabet_size or not alive[s] for s in word):
            return False
        pairs = zip(word, list(word[1:]) + ([word[0]] if cyclic else []))
        return all(self.adjacency[s][t] for s, t in pairs)

    def words(self, n: int):
        """All admissible length-n words in lexicographic order."""
        alive = np.flatnonzero(self.alive())
        out = [(s,) for s in alive]
        for _ in range(n - 1):
            out = [w + (t,) for w in out for t in alive if self.adjacency[w[-1]][t]]
        return out

    def step(self, word):
        return tuple(word[1:]) + (word[0],)

    def check_state(self, word):
        if not self.is_admissible(tuple(word), cyclic=True):
            raise InvalidStateError(f"word {tuple(word)} violates the adjacency (read periodically)")


GOLDEN_MEAN = SubshiftSFT(((1, 1), (1, 0)))
FULL_SHIFT = SubshiftSFT(((1, 1), (1, 1)))


def fixed_point_shift(symbol: int = 0, alphabet: int = 2) -> SubshiftSFT:
    """Shift whose only point is the constant sequence ``symbol``."""
    adj = [[0] * alphabet for _ in range(alphabet)]
    adj[symbol][symbol] = 1
    return SubshiftSFT(tuple(map(tuple, adj)))


def uniform_grid(lo: float, hi: float, count: int) -> tuple:
    """``count`` evenly spaced points from lo to hi inclusive, computed by division."""
    if count < 1:
        raise ConfigurationError("grid needs at least one point")
    if count == 1:
        return (float(lo),)
    d = count - 1
    return tuple((lo * (d - i) + hi * i) / d for i in range(count))


@dataclass(frozen=True)
class IdentityOnParams:
    """Identity map on a parameter grid; the fit is a static argmin."""

    grid: tuple
    refine: bool = True

    def __post_init__(self):
        g = tuple(float(v) for v in self.grid)
        if not g or list(g) != sorted(g):
            raise ConfigurationError("parameter grid must be non-empty and sorted")
        object.__setattr__(self, "grid", g)

    def step(self, theta):
        return theta

    def check_state(self, theta):
        if not self.grid[0] <= theta <= self.grid[-1]:
            raise InvalidStateError(f"parameter {theta} outside [{self.grid[0]}, {self.grid[-1]}]")


@dataclass(frozen=True)
class RotationGrid:
    """Candidate lattice theta_i = i / theta_den (lo <= i <= hi), u_j = j / u_den.

    All candidates are rationals, so orbit labels are computed in integer
    arithmetic and boundary hits are resolved exactly.
    """

    theta_den: int
    theta_lo: int
    theta_hi: int
    u_den: int = 1000

    def __post_init__(self):
        if self.theta_den < 1 or self.u_den < 1:
            raise ConfigurationError("grid denominators must be positive")
        if not 0 <= self.theta_lo <= self.theta_hi or 2 * self.theta_hi > self.theta_den:
            raise ConfigurationError("theta grid must lie inside [0, 1/2]")

    @classmethod
    def from_spacing(cls, theta_step, u_step, lo=0, hi=Fraction(1, 2)) -> "RotationGrid":
        """Grid with spacings ``theta_step`` and ``u_step`` (reciprocals of integers)."""
        ts, us = Fraction(str(theta_step)), Fraction(str(u_step))
        if ts <= 0 or us <= 0 or ts.numerator != 1 or us.numerator != 1:
            raise ConfigurationError("grid spacings must be 1/N for a positive integer N")
        lo, hi = Fraction(str(lo)), Fraction(str(hi))
        den = ts.denominator
        return cls(den, math.ceil(lo * den), math.floor(hi * den), us.denominator)

    @classmethod
    def single(cls, angle: Fraction, u_den: int) -> "RotationGrid":
        angle = Fraction(angle)
        return cls(angle.denominator, angle.numerator, angle.numerator, u_den)

    @property
    def size(self) -> int:
        return self.theta_hi - self.theta_lo + 1

    def thetas(self) -> list:
        return [Fraction(i, self.theta_den) for i in range(self.theta_lo, self.theta_hi + 1)]


@dataclass(frozen=True)
class FiberProduct:
    """Pairs (theta, label sequence of the rotation by theta from u).

    States are stored as ``(theta, u)``; the map fixes theta and advances u,
    which shifts the label sequence by one symbol. Candidates come from a
    rational ``RotationGrid``.
    """

    grid: RotationGrid
    partition: Partition = DEFAULT_PARTITION
    refine: bool = True

    def step(self, state):
        theta, u = state
        return (theta, frac(u + theta))

    def check_state(self, state):
        theta, u = state
        if not 0 <= theta <= HALF or not 0 <= u < 1:
            raise InvalidStateError(f"fiber state {state} outside [0, 1/2] x [0, 1)")


TopologicalSystem = CircleRotation | SubshiftSFT | IdentityOnParams | FiberProduct


def iterate(system, x0, n: int) -> list:
    """Return ``[x0, S x0, ..., S^{n-1} x0]``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    system.check_state(x0)
    out = [x0]
    for _ in range(n - 1):
        out.append(system.step(out[-1]))
    return out


def label_of_state(system, state) -> int:
    """Symbol read by Hamming-type costs at a state."""
    if isinstance(system, SubshiftSFT):
        return int(state[0])
    if isinstance(system, CircleRotation):
        return system.partition.label(state)
    if isinstance(system, FiberProduct):
        return system.partition.label(state[1])
    raise ConfigurationError(f"{type(system).__name__} states carry no label")


# --------------------------------------------------------------------------
# observation sources
# --------------------------------------------------------------------------

def stationary_distribution(P) -> np.ndarray:
    """Stationary row vector of an irreducible stochastic matrix (float)."""
    P = np.asarray(P, dtype=np.float64)
    a = P.shape[0]
    A = np.vstack([P.T - np.eye(a), np.ones(a)])
    b = np.zeros(a + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


def _is_irreducible(P) -> bool:
    reach = (np.asarray(P, dtype=float) > 0).astype(int)
    a = reach.shape[0]
    closure = np.eye(a, dtype=int) | reach
    for _ in range(a):
        closure = ((closure @ closure) > 0).astype(int)
    return bool(closure.all())


@dataclass(frozen=True)
class MarkovChain:
    """Stationary finite-state chain started from its stationary law."""

    transition: tuple
    seed: int = 0

    def __post_init__(self):
        rows = tuple(tuple(as_number(v) for v in row) for row in self.transition)
        a = len(rows)
        if a == 0 or any(len(r) != a for r in rows):
            raise ConfigurationError("transition matrix must be square and non-empty")
        for i, r in enumerate(rows):
            if any(v < 0 for v in r):
                raise ConfigurationError(f"row {i} has a negative entry")
            if abs(float(sum(r)) - 1.0) > 1e-12:
                raise ConfigurationError(f"row {i} sums to {float(sum(r))}, not 1")
        if not _is_irreducible([[float(v) for v in r] for r in rows]):
            raise ConfigurationError("transition matrix is not irreducible")
        object.__setattr__(self, "transition", rows)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.transition])

    def stationary(self) -> np.ndarray:
        return stationary_distribution(self.matrix)

    def draw(self, n: int) -> np.ndarray:
        rng = rng_stream(self.seed)
        cum = np.cumsum(self.matrix, axis=1)
        cum[:, -1] = 1.0
        init = np.cumsum(self.stationary())
        init[-1] = 1.0
        r = rng.random(n).tolist()
        rows = [row.tolist() for row in cum]
        out = np.empty(n, dtype=np.uint8)
        state = bisect.bisect_right(init.tolist(), r[0])
        out[0] = state
        for k in range(1, n):
            state = bisect.bisect_right(rows[state], r[k])
            out[k] = state
        return out


@dataclass(frozen=True)
class IIDBinary:
    """Independent bits with P(1) = ``p``."""

    p: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", as_number(self.p))
        if not 0 <= self.p <= 1:
            raise ConfigurationError(f"success probability {self.p} outside [0, 1]")

    def draw(self, n: int) -> np.ndarray:
        return (rng_stream(self.seed).random(n) < float(self.p)).astype(np.uint8)


@dataclass(frozen=True)
class RotationOrbit:
    """Orbit of the rotation by ``angle`` from a random ergodic initial point.

    Irrational-mode (float angle): U is uniform on [0, 1), unless ``u`` fixes it.
    Exact mode (Fraction angle a/b): U is uniform on the orbit of ``u_base``.
    """

    angle: float | Fraction
    u: float | Fraction | None = None
    u_base: Fraction = Fraction(0)
    seed: int = 0
    partition: Partition = DEFAULT_PARTITION

    def __post_init__(self):
        object.__setattr__(self, "angle", as_number(self.angle))
        if self.u is not None:
            object.__setattr__(self, "u", as_number(self.u))
        if not 0 <= self.angle <= HALF:
            raise ConfigurationError(f"rotation angle {self.angle} outside [0, 1/2]")

    @property
    def exact(self) -> bool:
        return isinstance(self.angle, Fraction) and (self.u is None or isinstance(self.u, (Fraction, int)))

    def initial_point(self):
        if self.u is not None:
            return self.u
        rng = rng_stream(self.seed)
        if self.exact:
            b = self.angle.denominator
            return frac(Fraction(self.u_base) + Fraction(int(rng.integers(b)), b))
        return float(rng.random())

    def positions(self, n: int) -> np.ndarray:
        u = self.initial_point()
        if self.exact:
            u = Fraction(u)
            d = u.denominator * self.angle.denominator
            num = (u.numerator * (d // u.denominator) + np.arange(n, dtype=object)
                   * (self.angle.numerator * (d // self.angle.denominator))) % d
            return np.array([Fraction(int(v), d) for v in num], dtype=object)
        k = np.arange(n, dtype=np.float64)
        t = float(u) + k * float(self.angle)
        return t - np.floor(t)

    def labels(self, n: int) -> np.ndarray:
        return quantize(self.partition, self.positions(n))

    def draw(self, n: int) -> np.ndarray:
        pos = self.positions(n)
        return pos.astype(np.float64) if pos.dtype == object else pos


@dataclass(frozen=True)
class NoisyLabelChannel:
    """Labels of ``base`` XOR independent Bernoulli(p) flips.

    The base is drawn with this channel's seed, the flips with stream
    ``(seed, 1)``; so p = 0 reproduces the base source exactly.
    """

    base: object
    p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "p", as_number(self.p))
        if not 0 <= self.p < HALF:
            raise ConfigurationError(f"flip probability {self.p} outside [0, 1/2)")

    def clean(self, n: int) -> np.ndarray:
        base = replace(self.base, seed=self.seed)
        if isinstance(base, RotationOrbit):
            return base.labels(n)
        return base.draw(n).astype(np.uint8)

    def flips(self, n: int) -> np.ndarray:
        return (rng_stream(self.seed, 1).random(n) < float(self.p)).astype(np.uint8)

    def draw(self, n: int) -> np.ndarray:
        return self.clean(n) ^ self.flips(n)


ObservationSource = MarkovChain | IIDBinary | RotationOrbit | NoisyLabelChannel


def sample(source, n: int) -> np.ndarray:
    """n observations from ``source``; identical for identical seeds."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return source.draw(n)


# --------------------------------------------------------------------------
# costs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HammingOnLabels:
    """c(x, y) = 1 if the label of x differs from the observed symbol."""

    @property
    def dominator(self) -> float:
        return 1.0

    def table(self, ax: int, ay: int) -> np.ndarray:
        return np.array([[float(i != j) for j in range(ay)] for i in range(ax)])


@dataclass(frozen=True)
class NegLogDensity:
    """c(theta, u) = -log p_theta(u) for a density family from ``mle``."""

    family: object

    @property
    def dominator(self):
        return None  # integrable envelope, checked per sample by the family

    def __call__(self, theta, u):
        return -self.family.log_density(theta, u)


@dataclass(frozen=True)
class CustomCost:
    """Tabulated c over a finite product alphabet; ``values[x][y]``."""

    values: tuple = field(default_factory=tuple)

    def __post_init__(self):
        vals = tuple(tuple(float(as_number(v)) for v in row) for row in self.values)
        if not vals or any(len(r) != len(vals[0]) for r in vals):
            raise ConfigurationError("cost table must be a non-empty rectangle")
        if not all(math.isfinite(v) for r in vals for v in r):
            raise ConfigurationError("tabulated costs need a finite dominating bound")
        object.__setattr__(self, "values", vals)

    @property
    def dominator(self) -> float:
        return max(abs(v) for r in self.values for v in r)

    def table(self, ax: int, ay: int) -> np.ndarray:
        t = np.array(self.values)
        if t.shape[0] < ax or t.shape[1] < ay:
            raise ConfigurationError(f"cost table {t.shape} too small for alphabets ({ax}, {ay})")
        return t[:ax, :ay]


CostFunction = HammingOnLabels | NegLogDensity | CustomCost

