import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from morrey_lab.catalog import (
    BallIndicator,
    BallSumPhi,
    Constant,
    ExteriorTruncated,
    Function,
    Gaussian,
    PiecewiseRadialPower,
    RadialPower,
    Scaled,
    SmoothBump,
    Sum,
    Tail,
    Translated,
    Zero,
    ball_truncate,
    evaluate,
    exact_ball_power_integral,
    from_dict,
)
from morrey_lab.errors import DimensionMismatch, Divergent, SingularPoint
from morrey_lab.geometry import ball_volume, integer_cover_count, intersection_volume, sphere_area

coord = st.floats(-3, 3, allow_nan=False)


def test_sphere_and_ball_measures():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert ball_volume(2, 3.0) == pytest.approx(9 * math.pi)
    assert ball_volume(3) == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_power_integral_matches_radial_quadrature(n):
    alpha, p, r = 0.4, 1.5, 2.5
    ref, _ = integrate.quad(lambda s: s ** (-alpha * p) * s ** (n - 1), 0, r)
    assert exact_ball_power_integral(alpha, p, n, r) == pytest.approx(sphere_area(n) * ref, rel=1e-10)


def test_power_integral_diverges_at_critical_exponent():
    with pytest.raises(Divergent):
        exact_ball_power_integral(1.0, 2.0, 2, 1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gaussian_ball_mass_is_chi_square_cdf(n):
    g = Gaussian(0.7, n)
    r = 1.3
    exact = special.gammainc(n / 2, (r / 0.7) ** 2 / 2)
    assert g.ball_integral((0.0,) * n, r, 1.0) == pytest.approx(exact, rel=1e-10)
    assert Function.radial_integral(g, r, 1.0) == pytest.approx(exact, rel=1e-8)


def test_piecewise_radial_integral_against_generic_quadrature():
    f = PiecewiseRadialPower(0.5, 2.0, 2)
    assert f.radial_integral(5.0, 1.0) == pytest.approx(Function.radial_integral(f, 5.0, 1.0), rel=1e-8)
    # |y|^-1/2 on B(0,1) in R^2: 2 pi / 1.5; |y|^-2 on the shell 1..5: 2 pi log 5
    assert f.radial_integral(5.0, 1.0) == pytest.approx(2 * math.pi / 1.5 + 2 * math.pi * math.log(5), rel=1e-12)


def test_smooth_bump_peak_and_support():
    b = SmoothBump(2.0, 1)
    assert evaluate(b, (0.0,)) == pytest.approx(1.0)
    assert evaluate(b, (2.0,)) == 0.0
    assert b.support_radius() == 2.0
    ref, _ = integrate.quad(lambda s: float(b.values(np.array([[s]]))[0]), -2, 2)
    assert b.mass == pytest.approx(ref, rel=1e-8)


def test_evaluate_raises_at_singular_point():
    with pytest.raises(SingularPoint):
        evaluate(RadialPower(0.5, 2), (0.0, 0.0))
    with pytest.raises(SingularPoint):
        evaluate(Translated(RadialPower(0.5, 1), (1.0,)), (1.0,))
    assert evaluate(RadialPower(0.5, 1), (4.0,)) == pytest.approx(0.5)
    assert evaluate(RadialPower(0.0, 1), (0.0,)) == 1.0


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        evaluate(Gaussian(1.0, 2), (0.0,))
    with pytest.raises(DimensionMismatch):
        Sum((Gaussian(1.0, 1), Gaussian(1.0, 2)))
    with pytest.raises(DimensionMismatch):
        RadialPower(1.0, 4)


@settings(max_examples=40, deadline=None)
@given(a=st.tuples(coord, coord), b=st.tuples(coord, coord), x=st.tuples(coord, coord))
def test_translations_compose(a, b, x):
    f = Gaussian(1.0, 2)
    twice = Translated(Translated(f, a), b)
    once = Translated(f, (a[0] + b[0], a[1] + b[1]))
    pts = np.array([x])
    assert twice.values(pts)[0] == pytest.approx(once.values(pts)[0], rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.1, 10), x=coord)
def test_scaled_is_composition_with_dilation(t, x):
    f = PiecewiseRadialPower(0.3, 1.2, 1)
    if abs(x) < 1e-6:
        return
    assert Scaled(f, t).values(np.array([[x]]))[0] == pytest.approx(f.values(np.array([[t * x]]))[0], rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(k=st.floats(0.2, 5), x=st.tuples(coord, coord))
def test_truncation_and_tail_split_the_function(k, x):
    f = Gaussian(1.0, 2)
    pts = np.array([x])
    total = ball_truncate(f, k).values(pts) + Tail(f, k).values(pts)
    assert total[0] == pytest.approx(f.values(pts)[0], rel=1e-12)


def test_truncating_compact_support_is_identity():
    f = BallIndicator((0.0,), 1.0)
    assert ball_truncate(f, 2.0) is f
    assert ball_truncate(ExteriorTruncated(Gaussian(), 3.0), 2.0) == ExteriorTruncated(Gaussian(), 2.0)


def test_translated_indicator_ball_integral():
    f = Translated(BallIndicator((0.0, 0.0), 1.0), (3.0, 0.0))
    assert f.ball_integral((3.0, 0.0), 2.0, 1.0) == pytest.approx(math.pi)
    assert f.ball_integral((0.0, 0.0), 1.0, 1.0) == 0.0


def test_ball_sum_phi_balls_are_disjoint():
    phi = BallSumPhi(12, 2)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2**13, size=(20000, 2)) * np.array([1.0, 1e-3])
    vals = phi.values(pts)
    assert set(np.unique(vals)) <= {0.0, 1.0}
    d = np.linalg.norm(pts[:, None, :] - phi.centers[None], axis=-1)
    assert np.array_equal(vals, (d < 1).sum(axis=1).astype(float))
    gaps = np.diff(phi.centers[:, 0])
    assert np.all(gaps > 2)
    assert phi.ball_integral(tuple(phi.centers[3]), 1.0, 1.0) == pytest.approx(math.pi)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_intersection_volume_limits(n):
    assert intersection_volume(0.0, 1.0, 2.0, n) == pytest.approx(ball_volume(n, 1.0))
    assert intersection_volume(3.0, 1.0, 2.0, n) == pytest.approx(0.0, abs=1e-15)
    vals = intersection_volume(np.linspace(0, 3, 31), 1.0, 2.0, n)
    assert np.all(np.diff(vals) <= 1e-12)


def test_intersection_volume_against_integration():
    # two unit discs at distance 1: 2 pi / 3 - sqrt(3) / 2
    assert intersection_volume(1.0, 1.0, 1.0, 2) == pytest.approx(2 * math.pi / 3 - math.sqrt(3) / 2)
    # two unit balls at distance 1 in R^3: 5 pi / 12
    assert intersection_volume(1.0, 1.0, 1.0, 3) == pytest.approx(5 * math.pi / 12)
    assert intersection_volume(0.5, 1.0, 0.25, 1) == pytest.approx(0.5)


def test_integer_cover_count_grows_with_radius():
    for n in (1, 2, 3):
        counts = [integer_cover_count(n, r) for r in (0.5, 1.0, 2.0, 4.0)]
        assert counts == sorted(counts)
        assert counts[0] >= 1


DESCRIPTORS = [
    Zero(2),
    Constant(2.5, 1),
    RadialPower(0.5, 3),
    PiecewiseRadialPower(0.25, 2.0, 1),
    BallIndicator((1.0, -2.0), 0.5),
    BallSumPhi(20, 2),
    Gaussian(0.3, 2),
    SmoothBump(1.5, 3),
    Sum((Gaussian(1.0, 1), RadialPower(0.2, 1)), (2.0, -1.0)),
    Scaled(Gaussian(1.0, 1), 3.0),
    Translated(SmoothBump(1.0, 2), (1.5, 0.0)),
    ExteriorTruncated(RadialPower(0.5, 1), 4.0),
    Tail(Gaussian(1.0, 2), 2.0),
]


@pytest.mark.parametrize("f", DESCRIPTORS, ids=lambda f: f.to_dict()["fn"])
def test_descriptor_round_trip(f):
    g = from_dict(f.to_dict())
    assert g.to_dict() == f.to_dict()
    pts = np.array([[0.3, -0.7, 1.1][: f.n]])
    assert np.allclose(g.values(pts), f.values(pts))


@pytest.mark.parametrize("bad", [{}, {"fn": "nope"}, {"fn": "gaussian", "mu": 1}, [1, 2], {"fn": "gaussian", "sigma": -1}])
def test_from_dict_rejects_bad_descriptors(bad):
    with pytest.raises(ValueError):
        from_dict(bad)
