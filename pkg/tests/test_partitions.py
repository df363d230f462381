import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from obsequiv.dynamics import GOLDEN_ALPHA, PhasePoint, System, baker_step_array
from obsequiv.errors import NoCell, ResourceLimit
from obsequiv.partitions import (
    Box,
    Partition,
    baker_image_matrix,
    cell_measure,
    coarse_grain,
    dyadic_partition,
    grid_partition,
    halves_partition,
    left_right_partition,
    observe,
    parse_partition,
    rotation_image_matrix,
)


def P(*c):
    return PhasePoint(c)


def test_left_right_examples():
    lr = left_right_partition()
    assert [cell_measure(lr, i) for i in range(2)] == [0.5, 0.5]
    assert lr.labels == ("s1", "s2") or list(lr.labels) == ["s1", "s2"]
    for y in (0.0, 0.3, 0.999):
        assert observe(P(0.49, y), lr) == 0
        assert observe(P(0.51, y), lr) == 1
    assert observe(P(0.3, 0.9), lr) == 0


def test_dyadic_observe_examples():
    a1 = dyadic_partition(1)
    i = observe(P(0.6, 0.2), a1)
    assert a1.cells[i].lo == (0.5, 0.0) and a1.cells[i].hi == (1.0, 0.5)
    j = observe(P(0.5, 0.5), a1)
    assert a1.cells[j].lo == (0.5, 0.5)


def test_dyadic_representatives():
    a1 = dyadic_partition(1)
    assert len(a1) == 4
    assert a1.representative(0) == pytest.approx((math.sqrt(2) / 4, math.sqrt(2) / 4))
    assert a1.representative(0)[0] == pytest.approx(0.35355, abs=1e-5)
    a2 = dyadic_partition(2)
    assert len(a2) == 16
    assert a2.representative(0) == pytest.approx((math.sqrt(2) / 8, math.sqrt(2) / 8))
    # second cell of the first column: offset pattern (sqrt2, 2 + sqrt2) / 2**(n+1)
    assert a2.representative(1) == pytest.approx((math.sqrt(2) / 8, (2 + math.sqrt(2)) / 8))
    for n in range(1, 6):
        part = dyadic_partition(n)
        for c, r in zip(part.cells, part.reps):
            assert c.contains(r)


@pytest.mark.parametrize("n", range(1, 6))
def test_dyadic_measures_sum_to_one(n):
    part = dyadic_partition(n)
    assert all(cell_measure(part, i) == 4.0**-n for i in range(len(part)))
    assert sum(Fraction(cell_measure(part, i)) for i in range(len(part))) == 1


def test_dyadic_cap():
    with pytest.raises(ResourceLimit):
        dyadic_partition(9)
    with pytest.raises(ValueError):
        dyadic_partition(0)


@given(st.integers(1, 6), st.integers(0, 2**30 - 1), st.integers(0, 2**30 - 1))
def test_dyadic_index_from_leading_bits(n, xi, yi):
    x, y = xi / 2**30, yi / 2**30
    part = dyadic_partition(n)
    ix, iy = xi >> (30 - n), yi >> (30 - n)
    assert observe(P(x, y), part) == ix * 2**n + iy


def test_observe_array_agrees_with_scalar():
    part = dyadic_partition(3)
    rng = np.random.default_rng(0)
    pts = rng.random((2000, 2))
    assert part.observe_array(pts).tolist() == [observe(P(*p), part) for p in pts]


def test_non_grid_partition_and_nocell():
    cells = [Box((0.0, 0.0), (0.5, 1.0)), Box((0.5, 0.0), (1.0, 0.5)), Box((0.5, 0.5), (1.0, 1.0))]
    part = Partition(cells, [(0.2, 0.2), (0.7, 0.2), (0.7, 0.7)], ["a", "b", "c"])
    assert observe(P(0.8, 0.9), part) == 2
    assert part.observe_array(np.array([[0.1, 0.1], [0.9, 0.1]])).tolist() == [0, 1]
    with pytest.raises(NoCell):
        part.observe((1.2, 0.1))


@pytest.mark.parametrize(
    "cells, reps, labels",
    [
        ([Box((0.0,), (0.6,)), Box((0.5,), (1.0,))], [(0.1,), (0.7,)], ["a", "b"]),  # overlap
        ([Box((0.0,), (0.5,)), Box((0.5,), (1.0,))], [(0.1,), (0.1,)], ["a", "b"]),  # equal reps
        ([Box((0.0,), (0.5,)), Box((0.5,), (1.0,))], [(0.6,), (0.7,)], ["a", "b"]),  # rep outside
        ([Box((0.0,), (0.5,)), Box((0.5,), (0.9,))], [(0.1,), (0.7,)], ["a", "b"]),  # not full
        ([Box((0.0,), (0.5,)), Box((0.5,), (1.0,))], [(0.1,), (0.7,)], ["a", "a"]),  # labels
    ],
)
def test_partition_invariants_enforced(cells, reps, labels):
    with pytest.raises(ValueError):
        Partition(cells, reps, labels)


def test_partition_json_round_trip(tmp_path):
    part = dyadic_partition(2)
    data = part.to_json()
    assert set(data) >= {"cells", "reps", "labels"}
    assert set(data["cells"][0]) == {"lo", "hi"}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(data))
    back = parse_partition(str(path))
    pts = np.random.default_rng(1).random((500, 2))
    assert np.array_equal(back.observe_array(pts), part.observe_array(pts))
    assert back.reps == part.reps


def test_parse_named_partitions():
    assert len(parse_partition("leftright")) == 2
    assert len(parse_partition("halves")) == 2
    assert len(parse_partition("dyadic:3")) == 64


def test_grid_partition_default_centres():
    g = grid_partition([(0.0, 0.25, 1.0)])
    assert g.reps == ((0.125,), (0.625,)) or [tuple(r) for r in g.reps] == [(0.125,), (0.625,)]


def brute_force_image(part, sub=64):
    """Transition fractions from mapping the centres of a fine sub-grid."""
    g = (np.arange(sub) + 0.5) / sub
    xs, ys = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    src = part.observe_array(pts)
    dst = part.observe_array(baker_step_array(pts))
    k = len(part)
    M = np.zeros((k, k))
    np.add.at(M, (src, dst), 1)
    return M / M.sum(axis=1, keepdims=True)


@pytest.mark.parametrize("spec", ["leftright", "dyadic:1", "dyadic:2", "dyadic:3"])
def test_baker_image_matrix_against_subcell_oracle(spec):
    part = parse_partition(spec)
    exact = np.array(baker_image_matrix(part), dtype=float)
    assert np.allclose(exact, brute_force_image(part), atol=1e-12)


def test_baker_image_rows_are_exact_halves():
    M = baker_image_matrix(dyadic_partition(1))
    for row in M:
        assert sorted(row.tolist()) == [0.0, 0.0, 0.5, 0.5]


def test_rotation_image_matrix_interval_oracle():
    M = rotation_image_matrix(halves_partition(), GOLDEN_ALPHA)
    a = GOLDEN_ALPHA
    # [0, 1/2) + a = [a, 1) u [0, a - 1/2): mass a - 1/2 lands in L.
    left_to_left = (a - 0.5) / 0.5
    assert M[0] == pytest.approx([left_to_left, 1 - left_to_left], abs=1e-12)
    assert M[0] == pytest.approx([0.236, 0.764], abs=1e-3)


def test_coarse_grain_rotation_frequencies():
    seq = coarse_grain(System.rotation(), P(0.1), 100_000, halves_partition())
    assert abs(seq.frequencies()[0] - 0.5) < 0.001
    assert seq.origin == "coarse-grained"


def test_coarse_grain_dimension_mismatch():
    with pytest.raises(ValueError):
        coarse_grain(System.rotation(), P(0.1), 10, left_right_partition())


def test_float_baker_coarse_grain_warns():
    with pytest.warns(RuntimeWarning):
        coarse_grain(System.baker(), P(0.3, 0.3), 100, left_right_partition())
