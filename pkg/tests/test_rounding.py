"""Dependent rounding: exact marginals, matching validity, termination."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from online_edge_coloring import rounding
from online_edge_coloring._kernels import round_batch
from online_edge_coloring.rounding import (
    SNAP_EPS,
    FractionalMatching,
    Rng,
    column_sums,
    drift_unmatched,
    row_sums,
    sample_matching,
    sample_matchings,
)


def test_rng_is_reproducible_and_spawns_children():
    a, b = Rng(42), Rng(42)
    assert [a.next_u64() for _ in range(4)] == [b.next_u64() for _ in range(4)]
    assert a.spawn_seed() == b.spawn_seed()
    assert Rng(1).next_u64() != Rng(2).next_u64()


def test_rand_below_is_in_range():
    rng = Rng(7)
    draws = [rng.rand_below(5) for _ in range(2000)]
    assert set(draws) == {0, 1, 2, 3, 4}


def test_rand_unit_is_in_unit_interval():
    rng = Rng(7)
    us = [rng.rand_unit() for _ in range(1000)]
    assert all(0.0 <= u < 1.0 for u in us)


def test_column_and_row_sums():
    x = FractionalMatching(left_size=2, right_size=2,
                           entries=[(0, 0, 0.4), (0, 1, 0.7)])
    assert column_sums(x).tolist() == pytest.approx([1.1, 0.0])
    assert row_sums(x).tolist() == pytest.approx([0.4, 0.7])
    empty = FractionalMatching(left_size=3, right_size=2, entries=[])
    assert column_sums(empty).tolist() == [0.0, 0.0, 0.0]
    fifths = FractionalMatching(
        left_size=1, right_size=5,
        entries=[(0, r, 1.0 / 5.0) for r in range(5)])
    assert abs(column_sums(fifths)[0] - 1.0) < 1e-12


def test_integral_point_passes_through():
    x = FractionalMatching(left_size=1, right_size=1,
                           entries=[(0, 0, 1.0)])
    out = sample_matchings(x, 20, Rng(3))
    assert (out == 0).all()


def test_two_color_split_marginal():
    x = FractionalMatching(left_size=2, right_size=1,
                           entries=[(0, 0, 0.5), (1, 0, 0.5)])
    out = sample_matchings(x, 100_000, Rng(11))
    assert ((out == 0) | (out == 1)).all()   # row sum is 1: always matched
    freq = float((out == 0).mean())
    assert abs(freq - 0.5) < 0.01


def test_cycle_support_yields_both_perfect_matchings():
    x = FractionalMatching(
        left_size=2, right_size=2,
        entries=[(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)])
    out = sample_matchings(x, 40_000, Rng(5))
    assert (out >= 0).all()
    assert (out[:, 0] != out[:, 1]).all()    # a color never repeats
    diag = float((out[:, 0] == 0).mean())
    assert abs(diag - 0.5) < 0.015


def test_marginals_match_weights_exactly():
    weights = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]
    x = FractionalMatching(
        left_size=3, right_size=3,
        entries=[(c, r, weights[c][r])
                 for c in range(3) for r in range(3)])
    m = 100_000
    out = sample_matchings(x, m, Rng(17))
    assert (out >= 0).all()                  # doubly stochastic: full cover
    assert (out[:, 0] != out[:, 1]).all()
    assert (out[:, 1] != out[:, 2]).all()
    assert (out[:, 0] != out[:, 2]).all()
    for c in range(3):
        for r in range(3):
            w = weights[c][r]
            emp = float((out[:, r] == c).mean())
            slack = 3.0 * np.sqrt(w * (1 - w) / m) + 0.005
            assert abs(emp - w) <= slack, (c, r, emp, w)


def test_exclusivity_is_extreme_negative_correlation():
    # one color split across two right nodes: the joint inclusion is
    # impossible, far below the 0.25 an independent pair would show
    x = FractionalMatching(left_size=1, right_size=2,
                           entries=[(0, 0, 0.5), (0, 1, 0.5)])
    out = sample_matchings(x, 50_000, Rng(23))
    both = (out[:, 0] == 0) & (out[:, 1] == 0)
    assert not both.any()
    assert abs(float((out[:, 0] == 0).mean()) - 0.5) < 0.015
    assert abs(float((out[:, 1] == 0).mean()) - 0.5) < 0.015


def test_rejects_row_sum_above_one():
    x = FractionalMatching(left_size=2, right_size=1,
                           entries=[(0, 0, 0.6), (1, 0, 0.6)])
    with pytest.raises(ValueError, match="right node 0"):
        sample_matchings(x, 1, Rng(0))


def test_rejects_column_sum_above_one():
    x = FractionalMatching(left_size=1, right_size=2,
                           entries=[(0, 0, 0.6), (0, 1, 0.6)])
    with pytest.raises(ValueError, match="color 0"):
        sample_matchings(x, 1, Rng(0))


def test_rejects_duplicate_entries():
    x = FractionalMatching(left_size=1, right_size=1,
                           entries=[(0, 0, 0.3), (0, 0, 0.3)])
    with pytest.raises(ValueError, match="duplicate"):
        sample_matchings(x, 1, Rng(0))


def test_rejects_weight_outside_unit_interval():
    for w in (1.5, -0.5):
        x = FractionalMatching(left_size=1, right_size=1,
                               entries=[(0, 0, w)])
        with pytest.raises(ValueError, match="outside"):
            sample_matchings(x, 1, Rng(0))


def test_rejects_out_of_range_indices():
    x = FractionalMatching(left_size=1, right_size=1,
                           entries=[(1, 0, 0.5)])
    with pytest.raises(ValueError, match="color index"):
        sample_matchings(x, 1, Rng(0))
    x = FractionalMatching(left_size=1, right_size=1,
                           entries=[(0, 2, 0.5)])
    with pytest.raises(ValueError, match="right index"):
        sample_matchings(x, 1, Rng(0))


def test_sample_matching_wraps_one_draw():
    x = FractionalMatching(left_size=2, right_size=2,
                           entries=[(0, 0, 1.0), (1, 1, 1.0)])
    match = sample_matching(x, Rng(1))
    assert sorted(match.pairs) == [(0, 0), (1, 1)]
    assert match.color_of() == {0: 0, 1: 1}


def test_drift_unmatched_flags_only_full_rows():
    x = FractionalMatching(
        left_size=2, right_size=2,
        entries=[(0, 0, 0.5), (1, 0, 0.5), (0, 1, 0.3)])
    assert drift_unmatched(x, np.array([-1, -1])) == [0]
    assert drift_unmatched(x, np.array([0, -1])) == []


def test_termination_settles_one_edge_per_step():
    x = FractionalMatching(
        left_size=4, right_size=4,
        entries=[(c, r, 0.25) for c in range(4) for r in range(4)])
    nsamples = 200
    rptr, e_row, e_col, w0 = rounding._to_csr(x)
    out, steps = round_batch(x.right_size, x.left_size, rptr, e_row,
                             e_col, w0, nsamples, np.uint64(99))
    assert (out >= 0).all()
    assert steps <= nsamples * len(x.entries)


@st.composite
def substochastic_points(draw):
    ncols = draw(st.integers(min_value=1, max_value=4))
    nrows = draw(st.integers(min_value=1, max_value=4))
    cap = max(nrows, ncols)
    entries = []
    for c in range(ncols):
        for r in range(nrows):
            u = draw(st.floats(min_value=0.0, max_value=1.0,
                               allow_nan=False))
            if u > 0.0:
                entries.append((c, r, u / cap))
    return FractionalMatching(left_size=ncols, right_size=nrows,
                              entries=entries)


@given(substochastic_points(), st.integers(min_value=0, max_value=2 ** 32))
@settings(max_examples=60, deadline=None)
def test_samples_are_always_matchings(x, seed):
    out = sample_matchings(x, 40, Rng(seed))
    support = {(c, r) for c, r, _w in x.entries}
    for row in out:
        matched = [(int(c), r) for r, c in enumerate(row) if c >= 0]
        colors = [c for c, _r in matched]
        assert len(set(colors)) == len(colors)
        assert all(pair in support for pair in matched)
    # a right node with full weight is never stranded
    sums = row_sums(x)
    for r in range(x.right_size):
        if sums[r] >= 1.0 - SNAP_EPS:
            assert (out[:, r] >= 0).all()
