import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from morrey_lab.catalog import (
    BallIndicator,
    Function,
    Gaussian,
    PiecewiseRadialPower,
    RadialPower,
    SmoothBump,
    Translated,
    Zero,
)
from morrey_lab.core import MorreyParams, SearchConfig
from morrey_lab.errors import AdmissibilityError, DimensionMismatch, Divergent
from morrey_lab.quadrature import QuadratureConfig
from morrey_lab.weighted import (
    PlainPower,
    PowerLog,
    PowerWeight,
    _tail_integral,
    almost_decreasing_check,
    embedding_gamma,
    embedding_scan,
    integral_condition,
    weight_from_dict,
    weighted_norm,
    weighted_norm_parts,
)

P21 = MorreyParams(2, 1.0, 1.0)
SHORT = SearchConfig(k_min=-8, k_max=10)

weights = st.one_of(
    st.builds(PowerWeight, st.floats(-4, 2)),
    st.builds(PlainPower, st.floats(-4, 2)),
    st.builds(PowerLog, st.floats(0.1, 3), st.floats(1, 4), st.floats(-2, 3)),
)


@pytest.mark.parametrize("w", [PowerWeight(-1.5), PlainPower(0.5), PowerLog(1.0, 2.0, 0.75)])
def test_weight_round_trip(w):
    assert weight_from_dict(w.to_dict()) == w


@pytest.mark.parametrize("bad", [{}, {"weight": "exp"}, {"weight": "power"}, {"weight": "power_log", "gamma": 1, "p": 0.5, "beta": 1}])
def test_weight_from_dict_rejects(bad):
    with pytest.raises(ValueError):
        weight_from_dict(bad)


def test_weight_values():
    assert PowerWeight(-2.0).values(1.0) == pytest.approx(0.5)
    assert PlainPower(-1.0).values(3.0) == pytest.approx(0.25)
    assert PowerLog(2.0, 2.0, 1.0).values(0.0) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(w=weights)
def test_near_origin_constants_bracket_the_weight(w):
    lo, hi = w.near_origin_constants()
    v = w.values(np.linspace(0, 1, 101))
    assert np.all(v >= lo * (1 - 1e-12)) and np.all(v <= hi * (1 + 1e-12))


@settings(max_examples=60, deadline=None)
@given(w=weights, p=st.floats(1, 4))
def test_majorant_dominates_the_weight(w, p):
    m = w.majorant(p)
    s = np.geomspace(2.0, 1e12, 400)
    lhs = w.values(s) ** p
    rhs = m.const * s**m.power * np.log(s) ** (-m.log_power)
    assert np.all(lhs <= rhs * (1 + 1e-10))


@pytest.mark.parametrize("c, b", [(-0.5, 0.0), (-1.0, 2.0), (-0.3, -1.5), (0.0, 2.0), (0.0, 1.5)])
def test_tail_integral_against_quadrature(c, b):
    start = 4.0
    ref, _ = integrate.quad(lambda u: math.exp(c * u) * u ** (-b), math.log(start), np.inf, epsrel=1e-10, limit=500)
    val = _tail_integral(1.0, c, b, start)
    if b >= 0 and c != 0:
        # replaces ln(s)^-b by its value at the start: an upper bound
        assert val >= ref * (1 - 1e-9)
    else:
        assert val == pytest.approx(ref, rel=1e-8)


def test_tail_integral_divergence():
    assert _tail_integral(1.0, 0.1, 5.0, 2.0) == math.inf
    assert _tail_integral(1.0, 0.0, 1.0, 2.0) == math.inf
    assert _tail_integral(0.0, 1.0, 0.0, 2.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(-4, 1), p=st.floats(1, 3), gamma=st.floats(0.1, 3))
def test_integral_condition_dichotomy(alpha, p, gamma):
    c = alpha * p + gamma
    assume(abs(c) > 1e-6)
    finite, value = integral_condition(PowerWeight(alpha), p, gamma)
    assert finite == (c < 0)
    assert (value < math.inf) == finite


@pytest.mark.parametrize("a", [-1.5, -2.0, -3.5])
def test_integral_condition_value(a):
    # integral of (1 + t)^a over [1, inf) is 2^(a + 1) / (-a - 1)
    finite, value = integral_condition(PlainPower(a), 1.0, 1.0)
    assert finite
    assert value == pytest.approx(2 ** (a + 1) / (-a - 1), rel=1e-6)


def test_log_weight_at_the_critical_power():
    assert integral_condition(PowerLog(1.0, 1.0, 2.0), 1.0, 1.0)[0]
    assert not integral_condition(PowerLog(1.0, 1.0, 1.0), 1.0, 1.0)[0]
    assert not integral_condition(PowerLog(1.0, 1.0, 0.5), 1.0, 1.0)[0]
    assert integral_condition(PowerLog(2.0, 2.0, 0.6), 2.0, 1.0)[0]
    with pytest.raises(ValueError):
        integral_condition(PowerWeight(-2.0), 1.0, 0.0)


def test_almost_decreasing_examples():
    holds, ratio = almost_decreasing_check(PowerWeight(-1.0), 1.0, 0.5)
    assert holds and ratio >= 1.0
    holds, _ = almost_decreasing_check(PowerWeight(0.0), 1.0, 1.0)
    assert not holds
    # g = t (1 + t^2)^-0.55 rises until t = sqrt(10), then decays
    holds, ratio = almost_decreasing_check(PowerWeight(-1.1), 1.0, 1.0)
    assert holds
    g = lambda t: t * (1 + t * t) ** -0.55
    assert ratio == pytest.approx(g(math.sqrt(10)) / g(1.0), rel=1e-2)
    with pytest.raises(ValueError):
        almost_decreasing_check(PowerWeight(-1.0), 1.0, 0.5, grid=[2.0, 1.0])


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(-4, -0.5), gamma=st.floats(0.1, 2))
def test_power_weight_decreasing_iff_exponent_nonpositive(alpha, gamma):
    c = alpha + gamma
    assume(abs(c) > 0.05)
    holds, _ = almost_decreasing_check(PowerWeight(alpha), 1.0, gamma)
    assert holds == (c < 0)


def test_weighted_norm_oracles():
    assert weighted_norm(BallIndicator((0.0,), 1.0), PowerWeight(0.0), 1.0, 1) == pytest.approx(2.0, rel=1e-9)
    assert weighted_norm(Gaussian(1.0, 1), PlainPower(0.0), 1.0, 1) == pytest.approx(1.0, rel=1e-6)
    # |y|^-1 (1 + |y|^2)^-0.55 over the plane: 2 pi * integral of (1 + s^2)^-0.55 over [0, inf)
    exact = 2 * math.pi * math.sqrt(math.pi) * special.gamma(0.05) / (2 * special.gamma(0.55))
    assert weighted_norm(RadialPower(1.0, 2), PowerWeight(-1.1), 1.0, 2) == pytest.approx(exact, rel=1e-6)


def test_weighted_norm_of_off_centre_indicator():
    f = Translated(BallIndicator((0.0, 0.0), 1.0), (3.0, 0.0))
    ref, _ = integrate.dblquad(lambda y, x: (1 + x * x + y * y) ** -1, 2, 4,
                               lambda x: -math.sqrt(max(1 - (x - 3) ** 2, 0)), lambda x: math.sqrt(max(1 - (x - 3) ** 2, 0)))
    parts = weighted_norm_parts(f, PowerWeight(-2.0), 1.0, 2)
    assert parts.tail == 0.0
    assert parts.value == pytest.approx(ref, rel=1e-5)


def test_tail_split_is_consistent():
    f, w = RadialPower(1.0, 2), PowerWeight(-1.5)
    near = weighted_norm_parts(f, w, 1.0, 2, r_max=2.0**8)
    far = weighted_norm_parts(f, w, 1.0, 2, r_max=2.0**16)
    # the tail majorant is an upper bound, tighter for larger cut radii
    assert far.value <= near.value * (1 + 1e-9)
    assert near.value == pytest.approx(far.value, rel=2e-2)
    assert far.tail > 0 and near.tail > far.tail


@settings(max_examples=15, deadline=None)
@given(a1=st.floats(-3, -1.2), a2=st.floats(-3, -1.2))
def test_weighted_norm_monotone_in_the_weight(a1, a2):
    lo, hi = sorted((a1, a2))
    f = PiecewiseRadialPower(0.5, 0.5, 1)
    assert weighted_norm(f, PowerWeight(lo), 1.0, 1) <= weighted_norm(f, PowerWeight(hi), 1.0, 1) * (1 + 1e-6)


def test_weighted_norm_divergence():
    with pytest.raises(Divergent):
        weighted_norm(RadialPower(1.0, 2), PowerWeight(-1.0), 1.0, 2)
    with pytest.raises(Divergent):
        weighted_norm(Translated(RadialPower(1.0, 2), (3.0, 0.0)), PowerWeight(-0.5), 1.0, 2)
    with pytest.raises(DimensionMismatch):
        weighted_norm(Gaussian(1.0, 1), PowerWeight(-1.0), 1.0, 2)
    assert weighted_norm(Zero(2), PowerWeight(5.0), 1.0, 2) == 0.0


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-50, 50), y=st.floats(-50, 50))
def test_translated_tail_majorant(x, y):
    for f in (Translated(RadialPower(1.0, 2), (3.0, -1.0)), Translated(SmoothBump(1.0, 2), (2.0, 2.0))):
        d = f.tail_decay()
        r = math.hypot(x, y)
        assume(r >= max(d.start, 1e-9))
        val = abs(float(f.values(np.array([[x, y]]))[0]))
        bound = d.const * r ** (-d.exponent) if math.isfinite(d.exponent) else 0.0
        assert val <= bound * (1 + 1e-12)


def test_embedding_gamma():
    assert embedding_gamma(P21) == 1.0
    assert embedding_gamma(MorreyParams(2, 1.0, 1.0, "inhomogeneous")) == 2.0


class _NoTail(Function):
    n = 2

    def values(self, pts):
        return np.exp(-np.sum(np.asarray(pts) ** 2, axis=-1))

    def to_dict(self):
        return {"fn": "no_tail"}


def test_embedding_scan_entries():
    rep = embedding_scan([Gaussian(1.0, 2), Zero(2), _NoTail()], PowerWeight(-1.1), P21, SHORT)
    status = [e["status"] for e in rep.entries]
    assert status == ["ok", "skipped", "error"]
    assert "QuadratureFailure" in rep.entries[2]["reason"]
    assert rep.max_ratio == rep.entries[0]["ratio"]
    d = rep.to_dict()
    assert d["gamma"] == 1.0 and d["admissibility"]["integral_finite"]


def test_embedding_scan_preconditions():
    with pytest.raises(ValueError):
        embedding_scan([Gaussian(1.0, 2)], PowerWeight(-1.1), MorreyParams(2, 1.0, 0.0))
    with pytest.raises(AdmissibilityError):
        embedding_scan([Gaussian(1.0, 2)], PowerWeight(-0.9), P21)
    with pytest.raises(AdmissibilityError):
        embedding_scan([Gaussian(1.0, 2)], PowerWeight(0.5), P21)


def test_embedding_constants_are_stable_across_quadrature():
    catalog = [Gaussian(1.0, 2), Translated(BallIndicator((0.0, 0.0), 1.0), (3.0, 0.0)), PiecewiseRadialPower(0.5, 1.5, 2)]
    fine = SearchConfig(k_min=-8, k_max=10, quadrature=QuadratureConfig(radial_nodes=48, angular_nodes=96))
    a = embedding_scan(catalog, PowerWeight(-1.1), P21, SHORT)
    b = embedding_scan(catalog, PowerWeight(-1.1), P21, fine)
    for x, y in zip(a.entries, b.entries):
        assert x["ratio"] == pytest.approx(y["ratio"], rel=0.05)
