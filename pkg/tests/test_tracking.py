import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergotrack.dynsys import (
    FULL_SHIFT,
    GOLDEN_MEAN,
    CircleRotation,
    ConfigurationError,
    CustomCost,
    FiberProduct,
    HammingOnLabels,
    IdentityOnParams,
    IIDBinary,
    NegLogDensity,
    NoisyLabelChannel,
    RotationGrid,
    RotationOrbit,
    fixed_point_shift,
    rng_stream,
    sample,
)
from ergotrack.joining import build_instance, process_blocks, solve
from ergotrack.mle import BernoulliFamily
from ergotrack.quantized import RotationFamily, estimate_theta, generate
from ergotrack.tracking import (
    EstimatorTrace,
    TrackingProblem,
    empirical_cost,
    hamming_risk,
    optimal_tracking,
    phi_estimate,
    superadditivity_check,
    track_limit_estimate,
)

H = HammingOnLabels()
ZERO = fixed_point_shift(0)


def test_empirical_cost_constant_state():
    assert empirical_cost(ZERO, H, (0,), np.array([0, 1, 0, 1])) == 0.5


def test_empirical_cost_diagonal_matching():
    y = sample(IIDBinary(0.5, seed=1), 50)
    assert empirical_cost(FULL_SHIFT, H, tuple(int(v) for v in y), y) == 0.0


def test_golden_mean_against_all_ones():
    y = np.array([1, 1, 1, 1])
    # oracle: exhaustive enumeration of the 8 admissible words
    best = min(sum(a != b for a, b in zip(w, y)) for w in GOLDEN_MEAN.words(4)) / 4
    assert best == 0.5
    res = optimal_tracking(TrackingProblem(GOLDEN_MEAN, H, y))
    assert res.value == 0.5
    assert res.argmin_state == (0, 1, 0, 1)  # smallest of 0101 and 1010


def test_empty_window_rejected():
    with pytest.raises(ConfigurationError):
        TrackingProblem(GOLDEN_MEAN, H, np.array([]))


def test_log_of_zero_is_infinite_cost():
    fam = BernoulliFamily(grid=(0.0, 1.0), refine=False)
    assert empirical_cost(IdentityOnParams(fam.grid, refine=False), NegLogDensity(fam), 0.0, np.array([1, 0])) == math.inf


def test_all_infinite_candidates_give_infeasible():
    fam = BernoulliFamily(grid=(0.0, 1.0), refine=False)
    res = optimal_tracking(TrackingProblem(IdentityOnParams(fam.grid, refine=False), NegLogDensity(fam),
                                           np.array([0, 1])))
    assert res.status == "infeasible" and not res.feasible and res.value == math.inf


def test_infinite_candidates_skipped_when_finite_exist():
    fam = BernoulliFamily(grid=(0.0, 0.5, 1.0), refine=False)
    res = optimal_tracking(TrackingProblem(IdentityOnParams(fam.grid, refine=False), NegLogDensity(fam),
                                           np.array([0, 1])))
    assert res.argmin_state == 0.5 and res.value == pytest.approx(math.log(2))


def test_forced_value_constant_reference():
    y = np.array([0, 1] * 8)
    for n in range(2, 17, 2):
        assert optimal_tracking(TrackingProblem(ZERO, H, y[:n])).value == 0.5


def test_full_shift_tracks_anything():
    y = sample(IIDBinary(0.3, seed=8), 300)
    res = optimal_tracking(TrackingProblem(FULL_SHIFT, H, y))
    assert res.value == 0 and res.argmin_state == tuple(int(v) for v in y)


def test_value_recomputable_from_argmin():
    rng = rng_stream(4)
    for _ in range(20):
        y = rng.integers(0, 2, int(rng.integers(1, 300)))
        res = optimal_tracking(TrackingProblem(GOLDEN_MEAN, H, y))
        again = empirical_cost(GOLDEN_MEAN, H, res.argmin_state, y)
        assert abs(again - res.value) <= 1e-12 * max(1, abs(res.value))


def test_rotation_value_recomputable_exactly():
    run = generate(np.sqrt(2) / 4, 0.1, 4000, 5)
    for ref in (CircleRotation(Fraction(707, 2000)), CircleRotation(0.3535)):
        res = optimal_tracking(TrackingProblem(ref, H, run.observed))
        assert empirical_cost(ref, H, res.argmin_state, run.observed) == res.value


def test_fiber_value_recomputable_exactly():
    run = generate(np.sqrt(2) / 4, 0.2, 3000, 6)
    fp = FiberProduct(RotationGrid.from_spacing("1e-3", "1e-3"))
    res = optimal_tracking(TrackingProblem(fp, H, run.observed))
    assert empirical_cost(fp, H, res.argmin_state, run.observed) == res.value


def test_rotation_tracking_exact_orbit():
    y = RotationOrbit(Fraction(1, 4), u=Fraction(1, 8)).labels(400)
    res = optimal_tracking(TrackingProblem(CircleRotation(Fraction(1, 4)), H, y, candidate_resolution=16))
    assert res.value == 0
    # all u in [0, 1/4) code 0011...; smallest lattice point wins
    assert res.argmin_state == 0


def test_rotation_refinement_never_worse_than_coarse():
    run = generate(0.31, 0.15, 5000, 2)
    ref = CircleRotation(Fraction(31, 100))
    fine = optimal_tracking(TrackingProblem(ref, H, run.observed, candidate_resolution=50))
    coarse = min(hamming_risk(ref.angle, Fraction(j, 50), run.observed) for j in range(50))
    assert fine.value <= coarse


def test_superadditivity_examples():
    y = np.array([0, 1, 0, 1])
    assert superadditivity_check(ZERO, H, y, 2, 2)
    y = sample(IIDBinary(0.5, seed=3), 20)
    assert superadditivity_check(FULL_SHIFT, H, y, 7, 9)


def test_superadditivity_random_golden_mean_instances():
    rng = rng_stream(2024)
    for _ in range(100):
        m, n = (int(v) for v in rng.integers(1, 11, 2))
        y = rng.integers(0, 2, m + n)
        assert superadditivity_check(GOLDEN_MEAN, H, y, m, n)


def test_superadditivity_brute_force_values():
    rng = rng_stream(99)
    sft = GOLDEN_MEAN
    for _ in range(30):
        m, n = (int(v) for v in rng.integers(1, 6, 2))
        y = rng.integers(0, 2, m + n)

        def G(window):
            return min(sum(a != b for a, b in zip(w, window)) for w in sft.words(len(window)))

        assert G(y) >= G(y[:m]) + G(y[m:])


def test_superadditivity_arguments_validated():
    with pytest.raises(ValueError):
        superadditivity_check(GOLDEN_MEAN, H, np.zeros(3, dtype=int), 2, 2)
    with pytest.raises(ValueError):
        superadditivity_check(GOLDEN_MEAN, H, np.zeros(3, dtype=int), 0, 2)


@settings(max_examples=40, deadline=None)
@given(a=st.integers(1, 80), b0=st.integers(-48, 48), b1=st.integers(-48, 48),
       y=st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_scaling_equivariance(a, b0, b1, y):
    # dyadic coefficients keep every partial sum exact, so exact ties stay ties
    a, b0, b1 = a / 8, b0 / 16, b1 / 16
    y = np.array(y)
    base = CustomCost(((0, 1), (1, 0)))
    scaled = CustomCost(((a * 0 + b0, a * 1 + b1), (a * 1 + b0, a * 0 + b1)))
    r0 = optimal_tracking(TrackingProblem(GOLDEN_MEAN, base, y))
    r1 = optimal_tracking(TrackingProblem(GOLDEN_MEAN, scaled, y))
    shift = np.mean(np.where(y == 0, b0, b1))
    assert r1.value == pytest.approx(a * r0.value + shift, rel=1e-9, abs=1e-9)
    assert r1.argmin_state == r0.argmin_state


def test_lower_bound_sandwich_at_large_n():
    src = IIDBinary(Fraction(1, 2), seed=5)
    c1 = solve(build_instance(GOLDEN_MEAN, process_blocks(src, 2), H, 1)).value
    y = sample(src, 2 ** 14)
    value = optimal_tracking(TrackingProblem(GOLDEN_MEAN, H, y)).value
    assert float(c1) - 1e-9 <= value <= float(c1) + 0.05


def test_short_windows_can_undercut_the_relaxation():
    # the lower bound is asymptotic: one symbol already tracks perfectly
    c1 = solve(build_instance(GOLDEN_MEAN, process_blocks(IIDBinary(Fraction(1, 2)), 2), H, 1)).value
    assert c1 == Fraction(1, 8)
    assert optimal_tracking(TrackingProblem(GOLDEN_MEAN, H, np.array([0]))).value == 0 < c1


def test_phi_projections():
    fp = FiberProduct(RotationGrid.from_spacing("1e-2", "1e-2"))
    res = optimal_tracking(TrackingProblem(fp, H, RotationOrbit(Fraction(1, 4), u=0).labels(200)))
    assert phi_estimate(res, fp) == Fraction(1, 4)
    ident = IdentityOnParams((0.1, 0.2, 0.3))
    res = optimal_tracking(TrackingProblem(ident, NegLogDensity(BernoulliFamily(ident.grid)), np.array([0, 0, 1])))
    assert phi_estimate(res, ident) == res.argmin_state


def test_phi_requires_invariant_coordinate():
    res = optimal_tracking(TrackingProblem(GOLDEN_MEAN, H, np.array([0, 1])))
    with pytest.raises(ConfigurationError):
        phi_estimate(res, GOLDEN_MEAN)
    with pytest.raises(ConfigurationError):
        phi_estimate(res)


def test_phi_matches_quantized_estimator():
    run = generate(np.sqrt(2) / 4, 0.2, 5000, 12)
    fam = RotationFamily.from_spacing("1e-3", "1e-3")
    est = estimate_theta(run.observed, fam)
    fp = FiberProduct(fam.grid)
    res = optimal_tracking(TrackingProblem(fp, H, run.observed))
    assert phi_estimate(res, fp) == est.theta_hat
    assert res.value == est.min_risk


def test_determinism_across_threads():
    run = generate(np.sqrt(2) / 4, 0.2, 4000, 13)
    fp = FiberProduct(RotationGrid.from_spacing("1e-3", "1e-3"))
    a = optimal_tracking(TrackingProblem(fp, H, run.observed, threads=1))
    b = optimal_tracking(TrackingProblem(fp, H, run.observed, threads=3))
    assert a.argmin_state == b.argmin_state and a.value == b.value


def test_track_limit_estimate_traces():
    src = NoisyLabelChannel(RotationOrbit(Fraction(1, 2), u=0), 0, seed=1)
    tr = track_limit_estimate(ZERO, H, src, [2, 4, 8, 16])
    assert tr.values == [0.5] * 4
    tr = track_limit_estimate(FULL_SHIFT, H, IIDBinary(0.4, seed=3), [10, 20, 40])
    assert tr.values == [0.0] * 3
    csv_text = tr.to_csv()
    assert csv_text.splitlines()[0] == "n,argmin_id,theta_hat,value"


def test_track_limit_estimate_near_lp_at_largest_n():
    src = IIDBinary(Fraction(1, 2), seed=21)
    tr = track_limit_estimate(GOLDEN_MEAN, H, src, [2 ** j for j in range(8, 15)])
    c1 = float(solve(build_instance(GOLDEN_MEAN, process_blocks(src, 2), H, 1)).value)
    assert abs(tr.values[-1] - c1) <= 0.05


def test_trace_rows_strictly_increasing():
    tr = EstimatorTrace()
    res = optimal_tracking(TrackingProblem(ZERO, H, np.array([0, 1])))
    tr.append(2, res)
    with pytest.raises(ValueError):
        tr.append(2, res)


def test_schedule_must_increase():
    with pytest.raises(ConfigurationError):
        track_limit_estimate(ZERO, H, IIDBinary(0.5), [4, 2])


def test_hamming_cost_only_for_rotations():
    with pytest.raises(ConfigurationError):
        optimal_tracking(TrackingProblem(CircleRotation(0.25), CustomCost(((0, 1), (1, 0))), np.array([0, 1])))


def test_long_words_get_hashed_ids():
    from ergotrack.tracking import state_id
    assert state_id((0, 1)) == "01"
    assert state_id(tuple([0] * 100)).startswith("sha1:")
    assert state_id((Fraction(1, 4), Fraction(1, 8))) == "theta=1/4;u=1/8"


def test_min_over_exhaustive_product_grid_small():
    # full (theta, u) lattice brute force versus the searched minimum without refinement
    run = generate(Fraction(1, 3), 0.1, 300, 17)
    grid = RotationGrid.from_spacing("1e-2", "1e-2")
    fp = FiberProduct(grid, refine=False)
    res = optimal_tracking(TrackingProblem(fp, H, run.observed))
    best = min((hamming_risk(t, Fraction(j, 100), run.observed), t, Fraction(j, 100))
               for t, j in itertools.product(grid.thetas(), range(100)))
    assert res.value == best[0]
    assert res.argmin_state == (best[1], best[2])
