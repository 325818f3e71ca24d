import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multistop.exceptions import DivergenceAtZero, OutOfTableRange, ParseError, PoleAtDeltaOne
from multistop.model import (
    CurvatureTable, b_of_g, big_f_delta, block_b2, block_delta, block_identity, c_bps_sq,
    crossing_from_blocks, crossing_sum, f_of_g, h_func, load_curvature_table, rhs,
)
from multistop.validation import in_lens
from oracles import bessel_constants_mp

# (g, F(g), B(g)) from the 50-digit Bessel series
FB_FROZEN = [
    (0.25, 2.2746813537971264, 0.04639323390981811),
    (1.0, 2.7645763077147714, 0.28113782468115983),
    (2.0, 2.881017174713152, 0.5990181583977183),
]


def close(a, b, tol=1e-13):
    return abs(a - b) <= tol * max(abs(b), 1e-300)


@pytest.mark.parametrize("g,big_f,big_b", FB_FROZEN)
def test_coupling_constants_frozen(g, big_f, big_b):
    assert close(f_of_g(g), big_f)
    assert close(b_of_g(g), big_b)
    assert close(c_bps_sq(g), big_f - 1.0)


def test_coupling_constants_approach_strong_coupling_limit():
    # F(g) -> 3 as g grows
    assert abs(f_of_g(8.0) - 3.0) < abs(f_of_g(2.0) - 3.0) < abs(f_of_g(0.5) - 3.0)


def test_small_coupling_rejected():
    with pytest.raises(DivergenceAtZero):
        f_of_g(1e-8)


@pytest.mark.parametrize("delta,x,expected", [
    (1.5, 0.3, -0.15057851776842787),
    (1.5, 0.3 + 0.2j, 0.04956067897291534 - 0.22582108162015255j),
    (2.5, 0.3, -0.01784990936044509),
    (2.5, 0.3 + 0.2j, 0.02609926020636366 - 0.019393607094895432j),
])
def test_block_delta_frozen(delta, x, expected):
    assert close(block_delta(delta, x), expected)


@pytest.mark.parametrize("delta,x,expected", [
    (1.5, 0.3, -0.3324685271662757),
    (1.5, 0.3 + 0.2j, -0.4122605088595941 - 0.09793263537859988j),
    (2.5, 0.3, -0.10919711898388763),
    (2.5, 0.3 + 0.2j, -0.11658214074439349 + 0.05811329359858451j),
])
def test_big_f_frozen(delta, x, expected):
    assert close(big_f_delta(delta, x), expected)


def test_h_and_b2_frozen():
    assert close(h_func(0.3, 1.0), 0.09104396730646117)
    assert close(h_func(0.3 + 0.2j, 1.0), 0.09843244917160363 - 0.008947279050072685j)
    assert close(block_b2(0.4), -0.10642346526520964)
    assert block_identity(0.25) == 0.25


@pytest.mark.parametrize("delta", [1.0, 1.0 + 1e-12, 1.0 - 1e-10])
def test_pole_guard(delta):
    with pytest.raises(PoleAtDeltaOne):
        block_delta(delta, 0.3)


def test_block_at_origin_vanishes():
    assert block_delta(2.0, 0.0) == 0


def test_block_small_x_leading_power():
    # f ~ x^(D+1) / (1 - D) near 0
    d, x = 2.5, 1e-4
    assert close(block_delta(d, x), x ** (d + 1) / (1 - d), tol=1e-3)


def test_rhs_matches_independent_formula():
    curv = CurvatureTable.from_pairs([(0.5, 0.01), (1.5, 0.05)])
    g = 1.0
    c = 0.03
    with mp.workdps(40):
        big_f, big_b = bessel_constants_mp(g)
        ln2 = mp.log(2)
        r1 = (big_b - 3 * c) / (8 * big_b**2) + (7 * ln2 - mp.mpf(41) / 8) * (big_f - 1) + ln2
        r2 = (1 - big_f) / 6 + (2 - big_f) * ln2 + 1 - c / (4 * big_b**2)
    assert close(rhs(1, g, curv), float(r1), 1e-13)
    assert close(rhs(2, g, curv), float(r2), 1e-13)


def test_curvature_interpolation_and_range():
    curv = CurvatureTable.from_pairs([(0.0, 1.0), (2.0, 3.0)])
    assert curv(1.0) == 2.0
    with pytest.raises(OutOfTableRange):
        curv(2.5)


def test_load_curvature_table(tmp_path):
    p = tmp_path / "curv.csv"
    p.write_text("g,curvature\n0.5,0.1\n1.0,0.2\n")
    assert load_curvature_table(p)(0.75) == pytest.approx(0.15)
    bad = tmp_path / "bad.csv"
    bad.write_text("g,curvature\n0.5,0.1\n1.0,abc\n")
    with pytest.raises(ParseError, match=":3:"):
        load_curvature_table(bad)
    with pytest.raises(ParseError):
        load_curvature_table(tmp_path / "missing.csv")


lens_points = st.builds(complex, st.floats(-0.2, 1.2), st.floats(-0.9, 0.9)).filter(lambda x: in_lens(x, 0.05))


@settings(max_examples=40, deadline=None)
@given(x=lens_points, delta=st.sampled_from([1.5, 2.0, 2.5, 3.7, 6.0]), g=st.sampled_from([0.3, 1.0, 2.5]))
def test_crossing_symmetry(x, delta, g):
    assert abs(big_f_delta(delta, x) - big_f_delta(delta, 1 - x)) <= 1e-12 * max(1.0, abs(big_f_delta(delta, x)))
    assert abs(h_func(x, g) - h_func(1 - x, g)) <= 1e-12 * max(1.0, abs(h_func(x, g)))


@settings(max_examples=25, deadline=None)
@given(x=lens_points, c=st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_assembly_routes_agree(x, c):
    deltas = (1.5, 2.5, 3.5)
    a = crossing_sum(x, 1.0, deltas, c)
    b = crossing_from_blocks(x, 1.0, deltas, c)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_conjugation_symmetry():
    x = 0.31 + 0.27j
    assert close(big_f_delta(2.5, x.conjugate()), big_f_delta(2.5, x).conjugate(), 1e-14)
    assert math.isclose(big_f_delta(2.5, 0.4).imag, 0.0, abs_tol=0.0)
    assert np.isfinite(big_f_delta(2.5, 0.5))
