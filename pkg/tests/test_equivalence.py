import math
from fractions import Fraction

import numpy as np
import pytest

from obsequiv.dynamics import GOLDEN_ALPHA, PhasePoint, System
from obsequiv.equivalence import (
    baker_correlation_exact,
    baker_dyadic_chain,
    baker_dyadic_sequence,
    bernoulli_rejection_witness,
    cesaro_average,
    coding_conjugacy_sample,
    epsilon_congruence_bound_check,
    level_for_epsilon,
    markov_property_test,
    markov_replacement_certificate,
    mixing_estimate,
    nontriviality_verdict,
    rotation_correlation_exact,
    seeds_for,
)
from obsequiv.errors import TooShort
from obsequiv.partitions import (
    Box,
    baker_image_matrix,
    coarse_grain,
    dyadic_partition,
    grid_partition,
    halves_partition,
    left_right_partition,
)
from obsequiv.processes import MarkovModel, SymbolSequence, bernoulli_sample, empirical_transition_matrix

LEFT = Box((0.0, 0.0), (0.5, 1.0))
ARC = Box((0.0,), (0.5,))


# -- nontriviality -------------------------------------------------------------------

def test_nontriviality_examples():
    v = nontriviality_verdict(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert v.passed and v.witness_row == 0 and v.row_max == 0.5
    assert not nontriviality_verdict(np.eye(2)).passed


@pytest.mark.parametrize("part", [left_right_partition(), dyadic_partition(1), dyadic_partition(2)])
def test_nontriviality_analytic_baker_chains(part):
    M = baker_image_matrix(part)
    assert nontriviality_verdict(M).passed
    assert M.max() == 0.5


def test_nontriviality_rotation():
    seq = coarse_grain(System.rotation(), PhasePoint((0.1,)), 1_000_000, halves_partition())
    est = empirical_transition_matrix(seq)
    v = nontriviality_verdict(est.model)
    assert v.passed
    assert est.transition[0] == pytest.approx([0.236, 0.764], abs=0.01)


# -- correlations -----------------------------------------------------------------------

def test_baker_mixing_examples():
    v0, se0 = mixing_estimate(System.baker(), LEFT, LEFT, 0, 200_000, seed=1)
    assert abs(v0 - 0.25) < 4 * se0 + 1e-3
    v5, se5 = mixing_estimate(System.baker(), LEFT, LEFT, 5, 1_000_000, seed=2)
    assert abs(v5) < 0.005
    assert baker_correlation_exact(LEFT, LEFT, 0) == Fraction(1, 4)
    assert baker_correlation_exact(LEFT, LEFT, 5) == 0


def brute_correlation(a, b, n, k):
    """Enumerate dyadic sub-boxes of side 2**-(k+n) and push their centres n steps exactly."""
    res = n + k
    total = Fraction(0)
    side = Fraction(1, 2**res)
    for ix in range(2**res):
        for iy in range(2**res):
            x, y = Fraction(2 * ix + 1, 2 ** (res + 1)), Fraction(2 * iy + 1, 2 ** (res + 1))
            if not a.contains((float(x), float(y))):
                continue
            for _ in range(n):
                x, y = (2 * x, y / 2) if x < Fraction(1, 2) else (2 * x - 1, (y + 1) / 2)
            if b.contains((float(x), float(y))):
                total += side * side
    return total - Fraction(a.measure) * Fraction(b.measure)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_baker_exact_correlation_matches_enumeration(n):
    a = Box((0.25, 0.0), (0.75, 0.5))
    b = Box((0.0, 0.25), (0.5, 1.0))
    assert baker_correlation_exact(a, b, n) == brute_correlation(a, b, n, 2)


def test_rotation_correlation_closed_form():
    for n in range(1, 50):
        d = math.fmod(n * GOLDEN_ALPHA, 1.0)
        dist = min(d, 1 - d)
        assert rotation_correlation_exact(GOLDEN_ALPHA, ARC, ARC, n) == pytest.approx(0.25 - dist, abs=1e-12)


def test_rotation_monte_carlo_matches_closed_form():
    for n in (1, 3, 8):
        v, se = mixing_estimate(System.rotation(), ARC, ARC, n, 200_000, seed=n)
        assert abs(v - rotation_correlation_exact(GOLDEN_ALPHA, ARC, ARC, n)) < 4 * se + 1e-4


def test_cesaro_average():
    assert cesaro_average([1.0, -1.0, 0.5, -0.5]) == 0.0


def test_mixing_rejects_bad_input():
    with pytest.raises(ValueError):
        mixing_estimate(System.baker(), LEFT, LEFT, -1, 10, seed=0)
    with pytest.raises(ValueError):
        mixing_estimate(System.baker(), ARC, LEFT, 1, 10, seed=0)


# -- distance bound --------------------------------------------------------------------

def test_bound_examples():
    rep = dyadic_partition(2).representative(0)
    assert math.dist((0, 0), rep) == pytest.approx(0.25)
    assert 0.25 <= math.sqrt(2) / 4
    b1 = epsilon_congruence_bound_check(1)
    assert b1.passed and b1.max_distance <= math.sqrt(2) / 2
    b5 = epsilon_congruence_bound_check(5)
    assert b5.passed and b5.bound == pytest.approx(0.04419, abs=1e-5)
    assert level_for_epsilon(0.05) == 5


@pytest.mark.parametrize("n", range(1, 9))
def test_bound_against_corner_enumeration(n):
    part = dyadic_partition(n)
    worst = 0.0
    for c, r in zip(part.cells, part.reps):
        for x in (c.lo[0], c.hi[0]):
            for y in (c.lo[1], c.hi[1]):
                worst = max(worst, math.dist((x, y), r))
    res = epsilon_congruence_bound_check(n)
    assert res.passed
    assert res.max_distance == pytest.approx(worst, rel=1e-12)
    assert res.cells == 4**n


def test_bound_detects_misplaced_representatives():
    edges = (0.0, 0.5, 1.0)
    off = math.sqrt(2) / 4
    reps = [(ix / 2 + off, iy / 2 + off) for ix in range(2) for iy in range(2)]
    good = grid_partition([edges, edges], reps=reps)
    assert epsilon_congruence_bound_check(1, good).passed
    # default representatives sit at cell centres, off the sqrt(2) offset pattern
    with pytest.raises(ValueError):
        epsilon_congruence_bound_check(1, grid_partition([edges, edges]))


# -- chi-square verdicts -------------------------------------------------------------------

def order_two_chain(length, seed, noise=0.05):
    rng = np.random.default_rng(seed)
    out = np.zeros(length, dtype=np.int64)
    out[:2] = rng.integers(0, 2, 2)
    flips = rng.random(length) < noise
    for t in range(2, length):
        out[t] = (out[t - 1] ^ out[t - 2]) ^ flips[t]
    return SymbolSequence(2, out)


def test_markov_property_examples():
    assert markov_property_test(bernoulli_sample([0.5, 0.5], 1_000_000, seed=1)).passed
    assert markov_property_test(baker_dyadic_sequence(1, 1_000_000, seed=2)).passed
    assert not markov_property_test(order_two_chain(1_000_000, seed=3)).passed


def test_markov_property_too_short():
    with pytest.raises(TooShort):
        markov_property_test(bernoulli_sample([0.5, 0.5], 100, seed=1))


def test_bernoulli_witness_examples():
    assert not bernoulli_rejection_witness(bernoulli_sample([0.5, 0.5], 1_000_000, seed=4)).rejected
    w = bernoulli_rejection_witness(baker_dyadic_sequence(1, 1_000_000, seed=5))
    assert w.rejected
    i, j = w.witness
    assert baker_dyadic_chain(1).transition[i, j] == 0
    assert w.conditional == 0.0
    assert w.marginal == pytest.approx(0.25, abs=0.01)
    alt = SymbolSequence(2, np.arange(10_000) % 2)
    assert bernoulli_rejection_witness(alt).rejected


def test_markov_but_not_bernoulli_at_level_one():
    seq = baker_dyadic_sequence(1, 1_000_000, seed=6)
    assert markov_property_test(seq).passed
    assert bernoulli_rejection_witness(seq).rejected


# -- certificate ---------------------------------------------------------------------------

def test_markov_property_test_is_calibrated():
    # Under the null the p-values are uniform, so about 1% fall below 0.01.
    p = np.array([markov_property_test(baker_dyadic_sequence(1, 20_000, seed=s)).test.pvalue for s in range(200)])
    assert (p < 0.01).mean() <= 0.04
    assert 0.35 < p.mean() < 0.65


def test_certificate_small():
    cert = markov_replacement_certificate(1, 200_000, seed=8)
    assert cert.passed
    assert set(cert.checks) == {"markov_property", "irreducible", "aperiodic", "distance_bound", "uniform_stationary"}


def test_certificate_too_short():
    with pytest.raises(TooShort):
        markov_replacement_certificate(1, 100, seed=1)


def test_analytic_chain_matches_image_matrix():
    for n in (1, 2, 3):
        assert np.array_equal(baker_dyadic_chain(n).transition, baker_image_matrix(dyadic_partition(n)))


def test_coding_conjugacy_sample_and_seeds():
    res = coding_conjugacy_sample(100, 20, seed=3)
    assert res["passed"] and res["failures"] == 0
    assert seeds_for(5, 3) == seeds_for(5, 3)
    assert len(set(seeds_for(5, 10))) == 10


def test_model_from_estimate_is_markov_model():
    est = empirical_transition_matrix(baker_dyadic_sequence(1, 10_000, seed=1))
    assert isinstance(est.model, MarkovModel)
