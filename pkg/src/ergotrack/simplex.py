"""Two-phase primal simplex over exact rationals with Bland's rule.

Problems are in equality form: minimize c.x subject to A x = b, x >= 0.
Rows of A are sparse dicts ``{column: coefficient}``. Small instances only;
the tableau is dense over the non-zero pattern of each pivot row.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction


class InfeasibleError(ValueError):
    pass


class UnboundedError(ValueError):
    pass


@dataclass
class SimplexResult:
    x: list
    value: Fraction
    basis: list
    pivots: int


def _pivot(T, basis, pr, pc):
    row = T[pr]
    inv = 1 / row[pc]
    if inv != 1:
        for j, v in enumerate(row):
            if v:
                row[j] = v * inv
    nz = [j for j, v in enumerate(row) if v]
    for r, other in enumerate(T):
        if r == pr:
            continue
        f = other[pc]
        if f:
            for j in nz:
                other[j] -= f * row[j]
    basis[pr] = pc


def _run(T, basis, ncols, allowed):
    """Bland's rule on tableau T whose last row is the reduced-cost row."""
    pivots = 0
    obj = T[-1]
    m = len(T) - 1
    while True:
        pc = next((j for j in range(ncols) if allowed[j] and obj[j] < 0), None)
        if pc is None:
            return pivots
        best = None
        pr = None
        for r in range(m):
            a = T[r][pc]
            if a > 0:
                ratio = T[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[pr]):
                    best, pr = ratio, r
        if pr is None:
            raise UnboundedError(f"column {pc} is an unbounded direction")
        _pivot(T, basis, pr, pc)
        pivots += 1


def solve_lp(c, rows, b, n=None) -> SimplexResult:
    """Minimize ``c.x`` with ``rows[i].x == b[i]`` and ``x >= 0`` exactly."""
    n = len(c) if n is None else n
    m = len(rows)
    c = [Fraction(v) for v in c]
    width = n + m + 1
    T = []
    for i, (row, rhs) in enumerate(zip(rows, b)):
        sign = -1 if rhs < 0 else 1
        t = [Fraction(0)] * width
        for j, v in row.items():
            t[j] = Fraction(v) * sign
        t[n + i] = Fraction(1)
        t[-1] = Fraction(rhs) * sign
        T.append(t)
    basis = [n + i for i in range(m)]

    # phase one: minimise the sum of artificials
    obj = [Fraction(0)] * width
    for t in T:
        for j in range(n):
            obj[j] -= t[j]
        obj[-1] -= t[-1]
    T.append(obj)
    pivots = _run(T, basis, n, [True] * n + [False] * m)
    if T[-1][-1] != 0:
        raise InfeasibleError(f"phase one optimum {-T[-1][-1]} > 0")

    # drive zero-level artificials out of the basis; drop redundant rows
    r = 0
    while r < len(T) - 1:
        if basis[r] >= n:
            pc = next((j for j in range(n) if T[r][j] != 0), None)
            if pc is None:
                del T[r]
                del basis[r]
                continue
            _pivot(T, basis, r, pc)
            pivots += 1
        r += 1

    # phase two
    obj = [Fraction(0)] * width
    for j in range(n):
        obj[j] = c[j]
    for r, bv in enumerate(basis):
        cb = c[bv]
        if cb:
            row = T[r]
            for j in range(width):
                if row[j]:
                    obj[j] -= cb * row[j]
    T[-1] = obj
    pivots += _run(T, basis, n, [True] * n + [False] * m)

    x = [Fraction(0)] * n
    for r, bv in enumerate(basis):
        x[bv] = T[r][-1]
    value = sum((c[j] * x[j] for j in range(n) if x[j]), Fraction(0))
    return SimplexResult(x=x, value=value, basis=list(basis), pivots=pivots)


def solve_exact(A, b):
    """Solve a square or overdetermined consistent system exactly (Gauss-Jordan)."""
    M = [[Fraction(v) for v in row] + [Fraction(rhs)] for row, rhs in zip(A, b)]
    ncol = len(M[0]) - 1
    r = 0
    piv = []
    for col in range(ncol):
        p = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][col]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[r])]
        piv.append(col)
        r += 1
    if any(row[-1] != 0 for row in M[r:]):
        raise InfeasibleError("inconsistent linear system")
    if len(piv) < ncol:
        raise ValueError("linear system is underdetermined")
    x = [Fraction(0)] * ncol
    for i, col in enumerate(piv):
        x[col] = M[i][-1]
    return x


def _independent_rows(A, b):
    """Rows of the reduced row echelon form of [A | b] that are not identically zero."""
    M = [[Fraction(v) for v in row] + [Fraction(rhs)] for row, rhs in zip(A, b)]
    ncol = len(M[0]) - 1
    r = 0
    for col in range(ncol):
        p = next((i for i in range(r, len(M)) if M[i][col] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        inv = 1 / M[r][col]
        M[r] = [v * inv for v in M[r]]
        for i in range(len(M)):
            if i != r and M[i][col] != 0:
                f = M[i][col]
                M[i] = [a - f * bb for a, bb in zip(M[i], M[r])]
        r += 1
    if any(row[-1] != 0 for row in M[r:]):
        raise InfeasibleError("inconsistent linear system")
    return [row[:-1] for row in M[:r]], [row[-1] for row in M[:r]]


def vertex_enumeration(c, rows, b, n=None):
    """Minimum of c.x over {A x = b, x >= 0} by visiting every basic feasible solution.

    Exponential in the number of columns; an independent oracle for small LPs.
    Returns ``(value, vertices)`` with distinct vertices in enumeration order.
    """
    n = len(c) if n is None else n
    A = [[Fraction(row.get(j, 0)) for j in range(n)] for row in rows]
    A, b = _independent_rows(A, b)
    r = len(A)
    best, vertices = None, []
    for cols in itertools.combinations(range(n), r):
        try:
            xb = solve_exact([[row[j] for j in cols] for row in A], b)
        except ValueError:
            continue
        if any(v < 0 for v in xb):
            continue
        x = [Fraction(0)] * n
        for j, v in zip(cols, xb):
            x[j] = v
        if x in vertices:
            continue
        vertices.append(x)
        val = sum((Fraction(c[j]) * x[j] for j in range(n)), Fraction(0))
        best = val if best is None or val < best else best
    if best is None:
        raise InfeasibleError("no basic feasible solution")
    return best, vertices
