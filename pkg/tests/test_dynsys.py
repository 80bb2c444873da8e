from fractions import Fraction

import numpy as np
import pytest

from ergotrack.dynsys import (
    DEFAULT_PARTITION,
    GOLDEN_MEAN,
    CircleRotation,
    ConfigurationError,
    FiberProduct,
    IIDBinary,
    InvalidStateError,
    MarkovChain,
    NoisyLabelChannel,
    Partition,
    RotationGrid,
    RotationOrbit,
    SubshiftSFT,
    iterate,
    quantize,
    sample,
    stationary_distribution,
)


def test_iterate_zero_angle_is_identity():
    assert iterate(CircleRotation(0), 0.25, 3) == [0.25, 0.25, 0.25]


def test_iterate_quarter_rotation_exact():
    assert iterate(CircleRotation(Fraction(1, 4)), Fraction(0), 5) == [0, Fraction(1, 4), Fraction(1, 2),
                                                                       Fraction(3, 4), 0]


def test_iterate_shift_moves_left():
    word = (0, 1, 0, 1)
    traj = iterate(GOLDEN_MEAN, word, 2)
    assert traj[1][:3] == word[1:]


def test_iterate_rejects_inadmissible_word():
    with pytest.raises(InvalidStateError, match="11|adjacency|admissible"):
        iterate(GOLDEN_MEAN, (1, 1, 0), 2)


def test_iterate_semigroup_law():
    rot = CircleRotation(Fraction(2, 7))
    a = iterate(rot, Fraction(1, 3), 12)
    b = iterate(rot, a[5], 7)
    assert a[5:] == b


def test_rotation_angle_range_enforced():
    with pytest.raises(ConfigurationError):
        CircleRotation(0.6)


def test_sft_needs_a_cycle():
    with pytest.raises(ConfigurationError):
        SubshiftSFT(((0, 1), (0, 0)))


def test_fiber_product_fixes_parameter():
    fp = FiberProduct(RotationGrid.from_spacing("1e-2", "1e-2"))
    traj = iterate(fp, (Fraction(1, 4), Fraction(0)), 3)
    assert [s[0] for s in traj] == [Fraction(1, 4)] * 3
    assert traj[2][1] == Fraction(1, 2)


def test_sample_zero_probability():
    assert list(sample(IIDBinary(0.0, seed=1), 4)) == [0, 0, 0, 0]


def test_noisy_channel_without_flips_is_constant_base():
    src = NoisyLabelChannel(IIDBinary(0.0), 0, seed=4)
    assert list(sample(src, 4)) == [0, 0, 0, 0]


def test_noisy_channel_p0_equals_base():
    base = RotationOrbit(np.sqrt(2) / 4, seed=9)
    assert np.array_equal(sample(NoisyLabelChannel(base, 0, seed=9), 500), base.labels(500))


def test_markov_frequency_matches_stationary_vector():
    P = ((0.9, 0.1), (0.3, 0.7))
    pi = stationary_distribution(P)
    assert np.allclose(pi, [0.75, 0.25])
    # independent oracle: leading left eigenvector
    w, v = np.linalg.eig(np.array(P).T)
    lead = np.real(v[:, np.argmax(np.real(w))])
    assert np.allclose(lead / lead.sum(), pi)
    y = sample(MarkovChain(P, seed=2), 100000)
    assert abs(y.mean() - 0.25) <= 0.01


def test_sample_reproducible():
    src = MarkovChain(((0.5, 0.5), (0.2, 0.8)), seed=77)
    assert np.array_equal(sample(src, 1000), sample(src, 1000))
    assert not np.array_equal(sample(src, 1000), sample(MarkovChain(src.transition, seed=78), 1000))


def test_non_stochastic_matrix_rejected():
    with pytest.raises(ConfigurationError, match="sums to"):
        MarkovChain(((0.5, 0.6), (0.5, 0.5)))


def test_reducible_chain_rejected():
    with pytest.raises(ConfigurationError, match="irreducible"):
        MarkovChain(((1, 0), (0, 1)))


def test_quantize_examples():
    assert list(quantize(DEFAULT_PARTITION, [0, 0.25, 0.5, 0.75])) == [0, 0, 1, 1]
    assert list(quantize(DEFAULT_PARTITION, [0.5])) == [1]
    orbit = iterate(CircleRotation(Fraction(1, 4)), Fraction(0), 8)
    assert list(quantize(DEFAULT_PARTITION, orbit)) == [0, 0, 1, 1, 0, 0, 1, 1]


def test_quantize_rejects_points_outside():
    with pytest.raises(ValueError):
        quantize(DEFAULT_PARTITION, [1.0])
    with pytest.raises(ValueError):
        quantize(DEFAULT_PARTITION, [-0.1])


def test_partition_must_cover():
    with pytest.raises(ConfigurationError):
        Partition(((Fraction(0), Fraction(1, 3)), (Fraction(1, 2), Fraction(1))))


@pytest.mark.parametrize("a,b", [(1, 3), (2, 5), (3, 8), (1, 2)])
def test_rational_rotation_labels_are_periodic(a, b):
    labels = quantize(DEFAULT_PARTITION, iterate(CircleRotation(Fraction(a, b)), Fraction(1, 7), 4 * b))
    assert np.array_equal(labels[:b], labels[b:2 * b])


def test_exact_orbit_initial_point_on_orbit():
    src = RotationOrbit(Fraction(1, 4), seed=123)
    assert src.initial_point() in {0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)}
