import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latavg.averages import Normalization
from latavg.bilinear import (Method, bilinear, bilinear_at_points, bilinear_direct, bilinear_sliced,
                             domination_rhs, dyadic_levels, pair_count, prop1_rhs, thm2_rhs,
                             truncated_bilinear_maximal)
from latavg.grid import GridFunction, ModeError, RandomSparse, add, generate, maximum, shift
from latavg.lattice import enumerate_ball, enumerate_sphere, r
from oracles import brute_bilinear

seeds = st.integers(0, 2**32 - 1)


def rand(seed, d, mode="float", hw=2, density=0.4):
    f = generate(RandomSparse(seed, hw, density), d, mode)
    return f if not f.is_zero else GridFunction.delta(d, mode=mode)


def box(d, half):
    axis = np.arange(-half, half + 1)
    pts = np.stack(np.meshgrid(*[axis] * d, indexing="ij"), -1).reshape(-1, d)
    return GridFunction(d, pts, np.ones(len(pts)))


def assert_close(a, b, rel):
    keys = set(a.entries) | set(b.entries)
    for x in keys:
        u, v = a[x], b[x]
        assert abs(u - v) <= rel * max(abs(u), abs(v)), (x, u, v)


def test_pair_count_is_doubled_dimension_count():
    assert pair_count(3, 2) == 60 == r(6, 2)


def test_delta_pair_at_radius_two():
    res = bilinear_direct(GridFunction.delta(3), GridFunction.delta(3), 2)
    want = {tuple(int(c) for c in p): 1 / 60 for p in enumerate_sphere(3, 1).points}
    assert res.value.entries == want
    assert bilinear_sliced(GridFunction.delta(3), GridFunction.delta(3), 2).value.entries == want


@pytest.mark.parametrize("norm", list(Normalization))
def test_delta_pair_at_odd_radius_vanishes(norm):
    for m in Method:
        assert bilinear(GridFunction.delta(3), GridFunction.delta(3), 3, norm, m).value.is_zero


@pytest.mark.parametrize("lam", [1, 2, 4, 7])
def test_box_pair_is_one_deep_inside(lam):
    b = box(3, 5)
    for m in Method:
        out = bilinear(b, b, lam, "exact", m).value
        for x in [(0, 0, 0), (5 - math.isqrt(lam), 0, 0)]:
            assert out[x] == pytest.approx(1.0, abs=1e-14)


def test_zero_input_and_empty_normalizer():
    f = rand(3, 3)
    assert bilinear(f, GridFunction.zero(3), 5).value.is_zero
    # r_2(3) = 0, so in one dimension no pair has |u|^2 + |v|^2 = 3
    res = bilinear(GridFunction.delta(1), GridFunction.delta(1), 3)
    assert res.empty_normalizer and res.value.is_zero


def test_mode_rules():
    with pytest.raises(ModeError):
        bilinear(GridFunction.delta(2, mode="int"), GridFunction.delta(2, mode="int"), 2, "exact")
    with pytest.raises(ModeError):
        bilinear(GridFunction.delta(2, mode="int"), GridFunction.delta(2), 2, "unnorm")


def test_int_overflow_is_detected():
    big = GridFunction(2, [[0, 0]], [2**40], "int")
    with pytest.raises(OverflowError):
        bilinear(big, big, 10, "unnorm")


@given(st.integers(2, 4), st.integers(1, 14), seeds, seeds)
def test_direct_and_sliced_match_pair_oracle(d, lam, sf, sg):
    f, g = rand(sf, d, "int", hw=1, density=0.5), rand(sg, d, "int", hw=1, density=0.5)
    want = brute_bilinear(f, g, lam, d)
    direct = bilinear(f, g, lam, "unnorm", "direct")
    sliced = bilinear(f, g, lam, "unnorm", "sliced")
    assert direct.value.entries == want
    assert sliced.value == direct.value
    assert direct.pair_products >= len(want)


def test_sliced_random_sparse_radius_twenty():
    f, g = rand(11, 3, "int", hw=3, density=0.5), rand(12, 3, "int", hw=3, density=0.5)
    assert bilinear_sliced(f, g, 20, "unnorm").value == bilinear_direct(f, g, 20, "unnorm").value


@given(st.integers(1, 4), st.integers(1, 25), seeds, seeds)
def test_support_locality(d, lam, sf, sg):
    f, g = rand(sf, d), rand(sg, d)
    out = bilinear(f, g, lam).value
    ball = enumerate_ball(d, lam)
    near_f = {tuple(p + u) for p in f.coords for u in ball}
    near_g = {tuple(p + u) for p in g.coords for u in ball}
    assert set(out.entries) <= near_f & near_g


@given(st.integers(1, 25), seeds, seeds, seeds, st.integers(-4, 4), st.integers(-4, 4))
def test_bilinearity_exact(lam, s1, s2, s3, a, b):
    f1, f2, g = (rand(s, 3, "int") for s in (s1, s2, s3))
    lhs = bilinear(add(f1.scale(a), f2.scale(b)), g, lam, "unnorm").value
    rhs = add(bilinear(f1, g, lam, "unnorm").value.scale(a), bilinear(f2, g, lam, "unnorm").value.scale(b))
    assert lhs == rhs


@given(st.integers(1, 25), seeds, seeds, st.tuples(*[st.integers(-6, 6)] * 3))
def test_translation_equivariance_exact(lam, sf, sg, h):
    f, g = rand(sf, 3, "int"), rand(sg, 3, "int")
    assert bilinear(shift(f, h), shift(g, h), lam, "unnorm").value == shift(
        bilinear(f, g, lam, "unnorm").value, h)


@given(st.integers(1, 30), seeds, seeds, st.sampled_from(list(Method)))
def test_point_evaluation_matches_full_output(lam, sf, sg, method):
    f, g = rand(sf, 3), rand(sg, 3)
    full = bilinear(f, g, lam, "exact").value
    pts = np.array(list(full.entries) + [(9, 9, 9), (0, 0, 0), (-1, 3, 2)])
    vals = bilinear_at_points(f, g, pts, lam, "exact", method)
    for p, v in zip(pts, vals):
        assert v == pytest.approx(full[tuple(p)], rel=1e-12, abs=1e-300)


# -- sliced identity and pointwise bounds -----------------------------------------

def test_prop1_rhs_delta_example():
    d = GridFunction.delta(5)
    assert_close(prop1_rhs(d, d, 2), bilinear(d, d, 2, "power").value, 1e-12)


def test_prop1_rhs_on_box_interior():
    d, lam = 5, 10
    b = box(d, 4)
    want = pair_count(d, lam) / lam ** (d - 1)
    # closed form: sum_r r_d(r) r_d(lam - r) / lam^(d-1)
    assert want == pytest.approx(sum(r(d, q) * r(d, lam - q) for q in range(lam + 1)) / lam ** (d - 1))
    assert prop1_rhs(b, b, lam)[(0,) * d] == pytest.approx(want, rel=1e-13)


def test_prop1_rhs_zero_input():
    assert prop1_rhs(GridFunction.delta(3), GridFunction.zero(3), 4).is_zero


@given(st.integers(1, 5), st.integers(2, 30), seeds, seeds)
def test_sliced_identity_power_law(d, lam, sf, sg):
    f, g = rand(sf, d), rand(sg, d)
    assert_close(prop1_rhs(f, g, lam), bilinear(f, g, lam, "power").value, 1e-10)


def thm2_constant(d):
    return max(1.0, 2 ** (d / 2 - 1))


@given(st.integers(1, 5), st.integers(2, 40), seeds, seeds)
def test_thm2_bound_holds_pointwise(d, lam, sf, sg):
    f, g = rand(sf, d), rand(sg, d)
    lhs = bilinear(f, g, lam, "power").value
    rhs = thm2_rhs(f, g, lam)
    for x, v in lhs.entries.items():
        assert v <= thm2_constant(d) * rhs[x] * (1 + 1e-12)


def test_thm2_delta_ratio_recorded():
    delta = GridFunction.delta(3)
    lhs = bilinear(delta, delta, 8, "power").value
    rhs = thm2_rhs(delta, delta, 8)
    ratios = [v / rhs[x] for x, v in lhs.entries.items()]
    assert ratios and max(ratios) <= thm2_constant(3)


def test_dyadic_levels():
    assert [dyadic_levels(x) for x in (1, 2, 3, 4, 7, 8, 9)] == [0, 1, 1, 2, 2, 3, 3]


def test_proof_level_convention_misses_a_term():
    # with 2^K < lam <= 2^(K+1) and lam = 8, K = 2 and the radius-8 shell of g is never seen
    d, lam = 3, 8
    f = GridFunction.delta(d)
    g = GridFunction.delta(d, at=(2, 2, 0))
    lhs = bilinear(f, g, lam, "power").value
    assert lhs[(0, 0, 0)] > 0
    assert thm2_rhs(f, g, lam, top_level=2)[(0, 0, 0)] == 0
    assert thm2_rhs(f, g, lam)[(0, 0, 0)] >= lhs[(0, 0, 0)]


def test_domination_delta_example():
    delta = GridFunction.delta(3)
    rhs = domination_rhs(delta, delta, 2)
    lhs = bilinear(delta, delta, 2, "power").value
    for p in enumerate_sphere(3, 1).points:
        x = tuple(int(c) for c in p)
        assert rhs[x] > 0 and rhs[x] >= lhs[x]
    assert domination_rhs(GridFunction.zero(3), delta, 2).is_zero


@given(st.integers(1, 5), st.integers(1, 40), seeds, seeds)
def test_domination_holds_pointwise(d, lam, sf, sg):
    f, g = rand(sf, d), rand(sg, d)
    lhs = bilinear(f, g, lam, "power").value
    for rhs in (domination_rhs(f, g, lam), domination_rhs(g, f, lam)):
        for x, v in lhs.entries.items():
            assert v <= rhs[x] * (1 + 1e-12)


def test_truncated_maximal_delta_example():
    delta = GridFunction.delta(3)
    want = maximum(bilinear(delta, delta, 1).value, bilinear(delta, delta, 2).value)
    assert truncated_bilinear_maximal(delta, delta, 2) == want


@given(st.integers(1, 12), seeds, seeds)
def test_truncated_maximal_dominates_each_radius(lam_max, sf, sg):
    f, g = rand(sf, 3), rand(sg, 3)
    m = truncated_bilinear_maximal(f, g, lam_max)
    for lam in range(1, lam_max + 1):
        for x, v in bilinear(f, g, lam).value.entries.items():
            assert v <= m[x]
