"""Block-measure linear programs for the minimal joining cost.

A level-k instance has one variable per pair (x-block, y-block) of length k+1,
where the x-block is admissible in the reference shift and the y-block has
positive probability under the observed process. Feasible points are pair
measures whose left and right k-block marginals agree (stationarity of the
pair process) and whose y-marginal is the process block law. The optimum
C_k is nondecreasing in k and bounds the joining cost from below.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynsys import (
    ConfigurationError,
    CustomCost,
    HammingOnLabels,
    IIDBinary,
    MarkovChain,
    NoisyLabelChannel,
    RotationOrbit,
    SubshiftSFT,
    rng_stream,
)
from .simplex import solve_exact, solve_lp

DEFAULT_VARIABLE_CAP = 4096


class InconsistentBlocksError(ConfigurationError):
    """The supplied y-block law is not a stationary block distribution."""


# --------------------------------------------------------------------------
# block laws of observed processes
# --------------------------------------------------------------------------

def _exact(v):
    return isinstance(v, (Fraction, int))


def _markov_blocks(chain: MarkovChain, length: int):
    P = chain.transition
    exact = all(_exact(v) for row in P for v in row)
    a = len(P)
    if exact:
        A = [[(P[j][i] if i != j else P[j][i] - 1) for j in range(a)] for i in range(a)]
        A.append([1] * a)
        pi = solve_exact(A, [0] * a + [1])
    else:
        pi = list(chain.stationary())
    out = {}
    for w in itertools.product(range(a), repeat=length):
        pr = pi[w[0]]
        for s, t in zip(w, w[1:]):
            pr = pr * P[s][t]
        if pr:
            out[w] = pr
    return out


def _rotation_blocks(src: RotationOrbit, length: int):
    if not src.partition.is_default:
        raise ConfigurationError("rotation block laws are implemented for the two-cell partition")
    if src.exact and src.u is None:
        b = src.angle.denominator
        counts = {}
        for j in range(b):
            shifted = RotationOrbit(src.angle, u=(Fraction(src.u_base) + Fraction(j, b)) % 1)
            w = tuple(int(v) for v in shifted.labels(length))
            counts[w] = counts.get(w, 0) + Fraction(1, b)
        return counts
    # Lebesgue-distributed U: block probabilities are arc lengths
    theta = float(src.angle)
    k = np.arange(length)
    cuts = np.sort(np.concatenate([(-k * theta) % 1.0, (0.5 - k * theta) % 1.0, [0.0, 1.0]]))
    out = {}
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (lo + hi)
        t = mid + k * theta
        w = tuple(int(v) for v in ((t - np.floor(t)) >= 0.5))
        out[w] = out.get(w, 0.0) + float(hi - lo)
    return out


def process_blocks(source, length: int) -> dict:
    """Stationary law of length-``length`` words of a source.

    Exact (Fraction) whenever the source parameters are rational.
    """
    if length < 1:
        raise ValueError("block length must be positive")
    if isinstance(source, IIDBinary):
        p = source.p
        out = {}
        for w in itertools.product((0, 1), repeat=length):
            ones = sum(w)
            pr = p ** ones * (1 - p) ** (length - ones)
            if pr:
                out[w] = pr
        return out
    if isinstance(source, MarkovChain):
        return _markov_blocks(source, length)
    if isinstance(source, RotationOrbit):
        return _rotation_blocks(source, length)
    if isinstance(source, NoisyLabelChannel):
        clean = process_blocks(source.base, length)
        p = source.p
        out = {}
        for w in itertools.product((0, 1), repeat=length):
            tot = 0
            for c, pc in clean.items():
                d = sum(a != b for a, b in zip(w, c))
                tot = tot + pc * p ** d * (1 - p) ** (length - d)
            if tot:
                out[w] = tot
        return out
    raise ConfigurationError(f"no block law for {type(source).__name__}")


def check_blocks(y_blocks: dict, tol: float = 1e-12) -> int:
    """Validate a block law; returns the block length. Raises on the first violation."""
    if not y_blocks:
        raise InconsistentBlocksError("empty block law")
    lengths = {len(w) for w in y_blocks}
    if len(lengths) != 1:
        raise InconsistentBlocksError(f"mixed block lengths {sorted(lengths)}")
    (L,) = lengths
    exact = all(_exact(v) for v in y_blocks.values())
    for w, v in y_blocks.items():
        if v < 0:
            raise InconsistentBlocksError(f"negative mass {v} on block {w}")
    total = sum(y_blocks.values())
    if (total != 1) if exact else abs(total - 1) > tol:
        raise InconsistentBlocksError(f"block masses sum to {total}, not 1")
    if L == 1:
        return L
    left, right = {}, {}
    for w, v in y_blocks.items():
        left[w[:-1]] = left.get(w[:-1], 0) + v
        right[w[1:]] = right.get(w[1:], 0) + v
    for u in sorted(set(left) | set(right)):
        lv, rv = left.get(u, 0), right.get(u, 0)
        if (lv != rv) if exact else abs(lv - rv) > tol:
            raise InconsistentBlocksError(
                f"shift consistency fails at {u}: sum_s P({u}+s) = {lv} but sum_s P(s+{u}) = {rv}")
    return L


# --------------------------------------------------------------------------
# instance
# --------------------------------------------------------------------------

def cost_matrix(cost, ax: int, ay: int):
    """Cost over A_X x A_Y as nested lists, exact where possible."""
    if isinstance(cost, HammingOnLabels):
        return [[int(i != j) for j in range(ay)] for i in range(ax)]
    if isinstance(cost, CustomCost):
        t = cost.table(ax, ay)
        return [[Fraction(v).limit_denominator(10 ** 12) for v in row] for row in t.tolist()]
    rows = [list(r) for r in cost]
    if len(rows) < ax or any(len(r) < ay for r in rows):
        raise ConfigurationError("cost table too small for the alphabets")
    return [[v for v in r[:ay]] for r in rows[:ax]]


@dataclass
class JoiningLPInstance:
    x_sft: SubshiftSFT
    y_blocks: dict
    cost_table: list
    k: int
    x_blocks: list
    variables: list
    rows: list
    rhs: list
    row_labels: list
    objective: list

    @property
    def n_variables(self) -> int:
        return len(self.variables)


def build_instance(x_sft: SubshiftSFT, y_blocks: dict, cost_table, k: int,
                   max_variables: int = DEFAULT_VARIABLE_CAP) -> JoiningLPInstance:
    """Encode the level-k joining relaxation as an equality-form LP."""
    if k < 1:
        raise ConfigurationError("relaxation level k must be at least 1")
    L = check_blocks(y_blocks)
    if L != k + 1:
        raise ConfigurationError(f"level k={k} needs {k + 1}-blocks, got {L}-blocks")
    y_pos = {w: v for w, v in sorted(y_blocks.items()) if v > 0}
    x_blocks = x_sft.words(k + 1)
    ay = 1 + max(max(w) for w in y_pos)
    table = cost_matrix(cost_table, x_sft.alphabet_size, ay)
    count = len(x_blocks) * len(y_pos)
    if count > max_variables:
        raise ConfigurationError(f"level k={k} needs {count} variables, above the cap {max_variables}")

    variables = [(xa, yb) for xa in x_blocks for yb in y_pos]
    index = {v: i for i, v in enumerate(variables)}
    rows, rhs, labels = [], [], []

    for yb, mass in y_pos.items():
        rows.append({index[(xa, yb)]: 1 for xa in x_blocks})
        rhs.append(mass)
        labels.append(("y-marginal", yb))

    stat = {}
    for (xa, yb), i in index.items():
        lkey = (xa[:-1], yb[:-1])
        rkey = (xa[1:], yb[1:])
        stat.setdefault(lkey, {})
        stat[lkey][i] = stat[lkey].get(i, 0) + 1
        stat.setdefault(rkey, {})
        stat[rkey][i] = stat[rkey].get(i, 0) - 1
    for key in sorted(stat):
        row = {i: v for i, v in stat[key].items() if v}
        if row:
            rows.append(row)
            rhs.append(0)
            labels.append(("stationarity", key))

    objective = [table[xa[0]][yb[0]] for xa, yb in variables]
    return JoiningLPInstance(x_sft=x_sft, y_blocks=y_pos, cost_table=table, k=k,
                             x_blocks=x_blocks, variables=variables, rows=rows, rhs=rhs,
                             row_labels=labels, objective=objective)


# --------------------------------------------------------------------------
# solving
# --------------------------------------------------------------------------

@dataclass
class JoiningLPResult:
    value: Fraction | float
    optimal_measure: dict
    status: str
    residuals: dict = field(default_factory=dict)
    product_value: Fraction | float | None = None
    mode: str = "rational"


def residuals(instance: JoiningLPInstance, x) -> dict:
    """Largest absolute violation per constraint family, and of nonnegativity."""
    out = {"stationarity": 0, "y-marginal": 0, "nonnegativity": 0}
    for row, rhs, (kind, _) in zip(instance.rows, instance.rhs, instance.row_labels):
        r = abs(sum(v * x[i] for i, v in row.items()) - rhs)
        out[kind] = max(out[kind], r)
    out["nonnegativity"] = max([0] + [-v for v in x if v < 0])
    return out


def objective_value(instance: JoiningLPInstance, x):
    return sum(c * v for c, v in zip(instance.objective, x) if v)


def _invariant_cycle(x_sft: SubshiftSFT) -> list:
    """Symbols of one simple cycle of the live graph."""
    alive = x_sft.alive()
    s = int(np.flatnonzero(alive)[0])
    seen = [s]
    while True:
        t = next(j for j in range(x_sft.alphabet_size) if alive[j] and x_sft.adjacency[seen[-1]][j])
        if t in seen:
            return seen[seen.index(t):]
        seen.append(t)


def product_witness(instance: JoiningLPInstance) -> list:
    """mu x nu where mu is the uniform measure on a periodic orbit of X."""
    cyc = _invariant_cycle(instance.x_sft)
    L = len(cyc)
    width = instance.k + 1
    mu = {}
    for i in range(L):
        w = tuple(cyc[(i + j) % L] for j in range(width))
        mu[w] = mu.get(w, 0) + Fraction(1, L)
    return [mu.get(xa, 0) * instance.y_blocks[yb] for xa, yb in instance.variables]


def solve(instance: JoiningLPInstance, mode: str = "rational") -> JoiningLPResult:
    """Optimal joining-relaxation value and an optimal pair measure."""
    witness = product_witness(instance)
    wres = residuals(instance, witness)
    if any(v > 1e-12 for v in wres.values()):
        raise AssertionError(f"product witness infeasible: {wres}")
    pval = objective_value(instance, witness)
    if mode == "rational":
        res = solve_lp(instance.objective, instance.rows, instance.rhs)
        x = res.x
        value = res.value
    elif mode == "float":
        from scipy.optimize import linprog
        from scipy.sparse import lil_matrix

        A = lil_matrix((len(instance.rows), instance.n_variables))
        for r, row in enumerate(instance.rows):
            for i, v in row.items():
                A[r, i] = float(v)
        out = linprog(np.array(instance.objective, dtype=float), A_eq=A.tocsr(),
                      b_eq=np.array(instance.rhs, dtype=float), bounds=(0, None), method="highs")
        if out.status != 0:
            return JoiningLPResult(value=math.nan, optimal_measure={}, status="infeasible",
                                   product_value=float(pval), mode=mode)
        x = list(out.x)
        value = float(out.fun)
        pval = float(pval)
    else:
        raise ConfigurationError(f"unknown mode {mode!r}")
    measure = {v: w for v, w in zip(instance.variables, x) if w}
    return JoiningLPResult(value=value, optimal_measure=measure, status="optimal",
                           residuals=residuals(instance, x), product_value=pval, mode=mode)


def relaxation_ladder(x_sft: SubshiftSFT, y_blocks_family, cost, k_max: int,
                      mode: str = "rational", max_variables: int = DEFAULT_VARIABLE_CAP) -> list:
    """C_1, ..., C_kmax. ``y_blocks_family`` is a source or a callable length -> blocks."""
    blocks_of = y_blocks_family if callable(y_blocks_family) else (
        lambda L: process_blocks(y_blocks_family, L))
    values = []
    for k in range(1, k_max + 1):
        inst = build_instance(x_sft, blocks_of(k + 1), cost, k, max_variables=max_variables)
        values.append(solve(inst, mode=mode).value)
    return values


# --------------------------------------------------------------------------
# optimal face
# --------------------------------------------------------------------------

@dataclass
class FaceReport:
    value: Fraction
    vertices: list
    midpoints_checked: int
    midpoints_ok: bool
    max_residual: float
    max_objective_gap: float

    @property
    def singleton(self) -> bool:
        return len(self.vertices) == 1

    def describe(self) -> str:
        if self.singleton:
            return "singleton face"
        verdict = "all midpoints feasible and optimal" if self.midpoints_ok else "midpoint check FAILED"
        return f"{len(self.vertices)} optimal vertices; {self.midpoints_checked} midpoints; {verdict}"


def optimal_face_probe(instance: JoiningLPInstance, n_vertices: int = 4, seed: int = 0,
                       restarts: int | None = None, tol: float = 1e-9) -> FaceReport:
    """Distinct optimal basic solutions and a convexity check on their midpoints.

    Vertices come from minimising seeded random objectives over the optimal
    face {x feasible : c.x = C}; every pairwise midpoint is then checked for
    feasibility and optimality.
    """
    base = solve(instance)
    C = base.value
    face_rows = instance.rows + [{i: c for i, c in enumerate(instance.objective) if c}]
    face_rhs = instance.rhs + [C]
    rng = rng_stream(seed, 0xFACE)
    restarts = 4 * n_vertices if restarts is None else restarts
    vertices = [tuple(solve_lp(instance.objective, instance.rows, instance.rhs).x)]
    for _ in range(restarts):
        if len(vertices) >= n_vertices:
            break
        w = [int(v) for v in rng.integers(-5, 6, size=instance.n_variables)]
        # bounded: the face lies in the probability simplex
        x = tuple(solve_lp(w, face_rows, face_rhs).x)
        if x not in vertices:
            vertices.append(x)
    checked, ok, worst, gap = 0, True, 0.0, 0.0
    for a, b in itertools.combinations(vertices, 2):
        mid = [(u + v) / 2 for u, v in zip(a, b)]
        res = residuals(instance, mid)
        r = float(max(res.values()))
        g = float(abs(objective_value(instance, mid) - C))
        worst, gap = max(worst, r), max(gap, g)
        ok = ok and r <= tol and g <= tol
        checked += 1
    return FaceReport(value=C, vertices=[list(v) for v in vertices], midpoints_checked=checked,
                      midpoints_ok=ok, max_residual=worst, max_objective_gap=gap)
