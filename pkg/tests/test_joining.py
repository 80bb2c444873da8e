import itertools
from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from ergotrack.dynsys import (
    FULL_SHIFT,
    GOLDEN_MEAN,
    ConfigurationError,
    CustomCost,
    HammingOnLabels,
    IIDBinary,
    MarkovChain,
    NoisyLabelChannel,
    RotationOrbit,
    SubshiftSFT,
    fixed_point_shift,
)
from ergotrack.joining import (
    InconsistentBlocksError,
    build_instance,
    check_blocks,
    objective_value,
    optimal_face_probe,
    process_blocks,
    product_witness,
    relaxation_ladder,
    residuals,
    solve,
)
from ergotrack.simplex import InfeasibleError, solve_lp, vertex_enumeration

H = HammingOnLabels()
COIN = IIDBinary(Fraction(1, 2))


def _scipy_value(inst):
    A = np.zeros((len(inst.rows), inst.n_variables))
    for r, row in enumerate(inst.rows):
        for i, v in row.items():
            A[r, i] = float(v)
    out = linprog(np.array(inst.objective, dtype=float), A_eq=A, b_eq=np.array(inst.rhs, dtype=float),
                  bounds=(0, None), method="highs")
    assert out.status == 0
    return out.fun


def test_golden_mean_k1_variable_count_and_value():
    inst = build_instance(GOLDEN_MEAN, process_blocks(COIN, 2), H, 1)
    assert inst.n_variables == 12  # 3 admissible 2-blocks x 4 coin 2-blocks
    res = solve(inst)
    enum_value, _ = vertex_enumeration(inst.objective, inst.rows, inst.rhs, inst.n_variables)
    assert res.value == enum_value == Fraction(1, 8)
    assert _scipy_value(inst) == pytest.approx(0.125, abs=1e-9)


def test_fixed_point_times_coin_variable_count():
    # one admissible 2-block (0, 0) times four coin 2-blocks
    inst = build_instance(fixed_point_shift(0), process_blocks(COIN, 2), H, 1)
    assert inst.n_variables == 4
    assert solve(inst).value == Fraction(1, 2)


def test_forced_value_period_two():
    blocks = process_blocks(RotationOrbit(Fraction(1, 2)), 2)
    assert blocks == {(0, 1): Fraction(1, 2), (1, 0): Fraction(1, 2)}
    assert solve(build_instance(fixed_point_shift(0), blocks, H, 1)).value == Fraction(1, 2)


def test_full_shift_value_zero():
    for k in (1, 2):
        assert solve(build_instance(FULL_SHIFT, process_blocks(COIN, k + 1), H, k)).value == 0


def test_ladder_nondecreasing_and_matches_float_solver():
    ladder = relaxation_ladder(GOLDEN_MEAN, COIN, H, 3)
    assert ladder == [Fraction(1, 8), Fraction(1, 8), Fraction(5, 32)]
    floats = relaxation_ladder(GOLDEN_MEAN, COIN, H, 5, mode="float")
    assert floats == pytest.approx([0.125, 0.125, 0.15625, 0.15625, 0.1640625], abs=1e-9)
    assert all(b >= a - 1e-12 for a, b in zip(floats, floats[1:]))
    # the limit for this pair is 1/6 (half the mass of odd runs of ones is lost); the ladder stays below
    assert max(floats) <= 1 / 6


def test_markov_block_law_exact_stationary():
    chain = MarkovChain(((Fraction(9, 10), Fraction(1, 10)), (Fraction(3, 10), Fraction(7, 10))))
    b1 = process_blocks(chain, 1)
    assert b1 == {(0,): Fraction(3, 4), (1,): Fraction(1, 4)}
    b3 = process_blocks(chain, 3)
    assert check_blocks(b3) == 3 and sum(b3.values()) == 1


def test_rotation_block_law_exact_matches_arc_lengths():
    exact = process_blocks(RotationOrbit(Fraction(1, 4)), 3)
    arcs = process_blocks(RotationOrbit(0.25), 3)
    assert set(exact) == set(arcs)
    for w in exact:
        assert float(exact[w]) == pytest.approx(arcs[w], abs=1e-12)


def test_noisy_block_law_is_flip_convolution():
    src = NoisyLabelChannel(COIN, Fraction(1, 5))
    b = process_blocks(src, 2)
    assert all(v == Fraction(1, 4) for v in b.values())
    src = NoisyLabelChannel(RotationOrbit(Fraction(1, 2)), Fraction(1, 5))
    b = process_blocks(src, 2)
    assert b[(0, 0)] == Fraction(1, 2) * 2 * Fraction(1, 5) * Fraction(4, 5)
    assert sum(b.values()) == 1


def test_inconsistent_blocks_rejected_with_violated_row():
    bad = {(0, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)}
    with pytest.raises(InconsistentBlocksError, match="shift consistency fails"):
        build_instance(GOLDEN_MEAN, bad, H, 1)
    with pytest.raises(InconsistentBlocksError, match="sum to"):
        check_blocks({(0, 0): Fraction(1, 2)})
    with pytest.raises(InconsistentBlocksError, match="negative"):
        check_blocks({(0,): Fraction(3, 2), (1,): Fraction(-1, 2)})


def test_block_length_must_match_level():
    with pytest.raises(ConfigurationError, match="needs 3-blocks"):
        build_instance(GOLDEN_MEAN, process_blocks(COIN, 2), H, 2)


def test_variable_cap():
    with pytest.raises(ConfigurationError, match="cap"):
        build_instance(FULL_SHIFT, process_blocks(COIN, 5), H, 4, max_variables=100)


def test_optimal_measure_is_feasible_and_attains_value():
    inst = build_instance(GOLDEN_MEAN, process_blocks(COIN, 3), H, 2)
    res = solve(inst)
    x = [res.optimal_measure.get(v, 0) for v in inst.variables]
    assert all(v == 0 for v in residuals(inst, x).values())
    assert objective_value(inst, x) == res.value


def test_product_witness_upper_bound():
    inst = build_instance(GOLDEN_MEAN, process_blocks(COIN, 2), H, 1)
    w = product_witness(inst)
    assert all(v == 0 for v in residuals(inst, w).values())
    assert objective_value(inst, w) >= solve(inst).value


def test_custom_cost_exact():
    cost = CustomCost(((0, 2), (3, 0)))
    inst = build_instance(FULL_SHIFT, process_blocks(IIDBinary(Fraction(1, 3)), 2), cost, 1)
    assert solve(inst).value == 0


def test_face_probe_symmetric_instance_is_convex():
    x = SubshiftSFT(((1, 1, 1), (1, 0, 0), (1, 0, 0)))
    cost = CustomCost(((0, 1), (1, 0), (1, 0)))
    inst = build_instance(x, process_blocks(COIN, 2), cost, 1)
    rep = optimal_face_probe(inst, n_vertices=4, seed=1)
    assert len(rep.vertices) >= 2
    assert rep.midpoints_ok and rep.max_residual <= 1e-9 and rep.max_objective_gap <= 1e-9
    for v in rep.vertices:
        assert objective_value(inst, v) == rep.value


def test_face_probe_singleton():
    inst = build_instance(fixed_point_shift(0), process_blocks(RotationOrbit(Fraction(1, 2)), 2), H, 1)
    rep = optimal_face_probe(inst, n_vertices=3)
    assert rep.singleton and rep.describe() == "singleton face"


def test_simplex_against_vertex_enumeration_random():
    rng = np.random.default_rng(0)
    for _ in range(25):
        m, n = int(rng.integers(1, 4)), int(rng.integers(2, 7))
        A = rng.integers(0, 4, size=(m, n))
        x0 = rng.integers(0, 3, size=n)
        b = [int(v) for v in A @ x0]
        rows = [{j: int(A[i, j]) for j in range(n) if A[i, j]} for i in range(m)]
        # keep the problem bounded: add sum x <= big via a slack column
        rows.append({**{j: 1 for j in range(n)}, n: 1})
        b.append(int(x0.sum()) + 5)
        c = [int(v) for v in rng.integers(-3, 4, size=n)] + [0]
        assert solve_lp(c, rows, b, n + 1).value == vertex_enumeration(c, rows, b, n + 1)[0]


def test_infeasible_lp():
    with pytest.raises(InfeasibleError):
        solve_lp([1, 1], [{0: 1, 1: 1}], [-1])


def test_all_vertices_of_k1_instance_are_feasible():
    inst = build_instance(GOLDEN_MEAN, process_blocks(COIN, 2), H, 1)
    _, vertices = vertex_enumeration(inst.objective, inst.rows, inst.rhs, inst.n_variables)
    for v in vertices:
        assert all(r == 0 for r in residuals(inst, v).values())
    # distinct
    assert len({tuple(v) for v in vertices}) == len(vertices)
    assert len(list(itertools.combinations(vertices, 2))) >= 1
