import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latavg.analysis import fit_slope
from latavg.grid import GridFunction, RandomSparse, generate, shift
from latavg.lattice import enumerate_simplex_set, enumerate_triangle_set
from latavg.simplex import SimplexConfig, simplex_average, simplex_bound_rhs, triangle_average
from oracles import brute_triangles, brute_tuple_sum

seeds = st.integers(0, 2**32 - 1)


def rand(seed, d, mode="float"):
    f = generate(RandomSparse(seed, 2, 0.4), d, mode)
    return f if not f.is_zero else GridFunction.delta(d, mode=mode)


def box(d, half):
    axis = np.arange(-half, half + 1)
    pts = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), -1).reshape(-1, d)
    return GridFunction(d, pts, np.ones(len(pts)))


def test_power_exponent():
    assert SimplexConfig(7, 2, 4).power_exponent == 4
    assert SimplexConfig(9, 3, 4).power_exponent == 7.5
    with pytest.raises(ValueError):
        SimplexConfig(3, 1, 2)


@pytest.mark.parametrize("lam", [1, 3, 9, 15])
def test_odd_radius_vanishes(lam):
    f = rand(1, 3)
    assert triangle_average(f, f, lam).is_zero
    assert simplex_average([f, f, f], lam, "unnorm").is_zero


def test_delta_pair_vanishes():
    # u = v would need u.v = |u|^2 = 2, but triangles need u.v = 1
    delta = GridFunction.delta(3)
    assert triangle_average(delta, delta, 2).is_zero


@pytest.mark.parametrize("lam", [2, 6, 8])
def test_box_is_one_inside(lam):
    b = box(3, 6)
    out = triangle_average(b, b, lam)
    assert out[(0, 0, 0)] == 1.0
    assert out[(3, -3, 3)] == 1.0
    assert simplex_average([b, b, b], 2)[(0, 0, 0)] == 1.0


def test_radius_four_has_no_triangles_in_three_dimensions():
    # the radius-4 shell is {+-2 e_i}; pairwise dot products are 0 or -4, never 2
    assert len(enumerate_triangle_set(3, 4)) == 0
    assert triangle_average(box(3, 6), box(3, 6), 4).is_zero


def test_k2_is_the_triangle_operator():
    f, g = rand(5, 3), rand(6, 3)
    assert simplex_average([f, g], 4) == triangle_average(f, g, 4)
    assert np.array_equal(enumerate_simplex_set(3, 4, 2), enumerate_triangle_set(3, 4))


@given(st.sampled_from([(3, 2), (3, 4), (3, 6), (4, 2), (4, 4)]), seeds, seeds)
def test_triangle_sum_matches_brute_force(dl, sf, sg):
    d, lam = dl
    f, g = rand(sf, d, "int"), rand(sg, d, "int")
    want = brute_tuple_sum([f, g], brute_triangles(d, lam), d)
    assert triangle_average(f, g, lam, "unnorm").entries == want


@settings(max_examples=10)
@given(seeds, seeds, seeds)
def test_three_simplex_matches_brute_force(s1, s2, s3):
    fs = [rand(s, 4, "int") for s in (s1, s2, s3)]
    tuples = [tuple(tuple(u) for u in t) for t in enumerate_simplex_set(4, 2, 3)]
    assert simplex_average(fs, 2, "unnorm").entries == brute_tuple_sum(fs, tuples, 4)


@given(st.sampled_from([2, 4, 6, 8]), seeds, seeds)
def test_triangle_symmetry(lam, sf, sg):
    f, g = rand(sf, 3, "int"), rand(sg, 3, "int")
    assert triangle_average(f, g, lam, "unnorm") == triangle_average(g, f, lam, "unnorm")


@given(st.sampled_from([2, 4, 6]), seeds, seeds, st.tuples(*[st.integers(-5, 5)] * 3))
def test_translation_equivariance(lam, sf, sg, h):
    f, g = rand(sf, 3, "int"), rand(sg, 3, "int")
    assert triangle_average(shift(f, h), shift(g, h), lam, "unnorm") == shift(
        triangle_average(f, g, lam, "unnorm"), h)


def test_zero_factor():
    f = rand(2, 3)
    assert simplex_bound_rhs([f, GridFunction.zero(3), f], 2).is_zero
    assert simplex_average([f, GridFunction.zero(3)], 2).is_zero


def test_nonpositive_power_exponent_warns():
    delta = GridFunction.delta(3)
    with pytest.warns(RuntimeWarning):
        simplex_average([delta, delta], 2, "power")


def test_delta_bound_dominates():
    delta = GridFunction.delta(3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        lhs = simplex_average([delta] * 3, 2, "power")
    rhs = simplex_bound_rhs([delta] * 3, 2)
    for x, v in lhs.entries.items():
        assert v <= rhs[x]


@pytest.mark.parametrize("d,k", [(3, 2), (3, 3), (4, 2), (4, 3)])
def test_bound_ratio_is_lambda_uniform(d, k):
    fs = [rand(40 + i, d) for i in range(k)]
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for lam in range(2, 33, 2):
            lhs = simplex_average(fs, lam, "power")
            rhs = simplex_bound_rhs(fs, lam)
            ratios = [v / rhs[x] for x, v in lhs.entries.items()]
            assert all(q <= 1 + 1e-12 for q in ratios)
            if ratios:
                rows.append((lam, max(ratios)))
    if len(rows) >= 2:
        assert fit_slope(rows)[0] <= 0.3
