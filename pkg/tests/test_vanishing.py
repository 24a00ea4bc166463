import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morrey_lab.catalog import BallIndicator, BallSumPhi, Gaussian, PiecewiseRadialPower, RadialPower, Sum
from morrey_lab.core import MorreyParams, SearchConfig, morrey_norm
from morrey_lab.errors import RangeError
from morrey_lab.vanishing import (
    FAILS,
    HOLDS,
    INCONCLUSIVE,
    ExtendedCutoff,
    combine,
    decay_fit,
    flag,
    phi_bound_check,
    phi_counting_bound,
    phi_small_radius_check,
    truncation_functional,
    truncation_profile,
    uniform_truncation_check,
    vanishing_profiles,
)

P21 = MorreyParams(2, 1.0, 1.0)


@pytest.mark.parametrize("values, expected", [
    ([5.0, 1.0, 0.5, 0.01], HOLDS),
    ([1.0, 0.5, 0.2], INCONCLUSIVE),
    ([1.0, 1.05, 1.02], FAILS),
    ([3.0, 3.0, 3.0], FAILS),
    ([0.0, 0.0, 0.0], HOLDS),
    ([0.01, 0.005], INCONCLUSIVE),
    ([0.001, 0.002, 0.001], INCONCLUSIVE),
])
def test_flag_rules(values, expected):
    assert flag(values, 1.0) == expected


def test_combine():
    assert combine([HOLDS, HOLDS]) == HOLDS
    assert combine([HOLDS, FAILS, INCONCLUSIVE]) == FAILS
    assert combine([HOLDS, INCONCLUSIVE]) == INCONCLUSIVE


def test_decay_fit_recovers_power_law():
    x = 2.0 ** np.arange(1, 10)
    fit = decay_fit(x, 3.0 * x**-1.5)
    assert fit["slope"] == pytest.approx(-1.5)
    assert fit["residual"] == pytest.approx(0.0, abs=1e-12)
    assert fit["points"] == 5
    assert decay_fit([1.0], [1.0])["slope"] is None
    assert decay_fit([1.0, 2.0], [0.0, 0.0])["points"] == 0


def test_extended_cutoff():
    pts = np.array([[0.5], [1.5], [-3.0]])
    assert np.array_equal(ExtendedCutoff(0.0).values(pts), [1.0, 1.0, 1.0])
    assert np.array_equal(ExtendedCutoff(-2.0).values(pts), [1.0, 1.0, 1.0])
    assert np.array_equal(ExtendedCutoff(1.0).values(pts), [0.0, 1.0, 1.0])
    f = Gaussian(1.0, 1)
    assert ExtendedCutoff(-1.0).apply(f) is f


def test_truncation_functional_of_indicator():
    f = BallIndicator((0.0,), 1.0)
    assert truncation_functional(f, 1.0, 0.5) == pytest.approx(1.0, rel=1e-9)
    assert truncation_functional(f, 1.0, 2.0) == 0.0
    assert truncation_functional(f, 1.0, ExtendedCutoff(0.0)) == pytest.approx(2.0, rel=1e-9)
    with pytest.raises(ValueError):
        truncation_functional(f, 0.5, 1.0)


@pytest.mark.parametrize("f", [Gaussian(1.0, 1), PiecewiseRadialPower(0.25, 2.0, 1), RadialPower(0.5, 1)])
def test_truncation_profile_is_monotone_in_the_cutoff(f):
    prof = truncation_profile(f, 1.0, [1, 2, 4, 8, 16])
    assert np.all(np.diff(prof.values()) <= 1e-9 * prof.values()[0])
    assert prof.schedule() == [1, 2, 4, 8, 16]


def test_power_tail_matches_closed_form():
    # |x|^-1/2 outside (-N, N): the best unit ball is [N, N + 2]
    for N in (2, 8):
        exact = 2 * (math.sqrt(N + 2) - math.sqrt(N))
        assert truncation_functional(RadialPower(0.5, 1), 1.0, N) == pytest.approx(exact, rel=1e-6)


@settings(max_examples=10, deadline=None)
@given(N=st.floats(0.5, 50), R0=st.sampled_from([0.5, 1.0, 2.0, 3.0]))
def test_uniform_truncation_bound(N, R0):
    f = PiecewiseRadialPower(0.25, 2.0, 1)
    cfg = SearchConfig(k_min=-6)
    lhs, K0 = uniform_truncation_check(f, 1.0, N, R0, cfg)
    assert lhs <= K0 * truncation_functional(f, 1.0, N, cfg) * (1 + 1e-9)


def test_uniform_truncation_rejects_bad_radius():
    with pytest.raises(ValueError):
        uniform_truncation_check(Gaussian(), 1.0, 2.0, 0.0)


def test_membership_of_gaussian():
    rep = vanishing_profiles(Gaussian(1.0, 1), MorreyParams(1, 1.0, 0.5))
    assert rep.flags == {"V0": HOLDS, "VInf": HOLDS, "VStar": HOLDS, "VClass": HOLDS}
    assert rep.confidence["VInf"]["slope"] == pytest.approx(-0.5, abs=0.05)
    d = rep.to_dict()
    assert set(d) == {"norm", "flags", "confidence", "v0_profile", "vinf_profile", "truncation_profile"}
    assert [e[0] for e in d["v0_profile"]] == sorted((e[0] for e in d["v0_profile"]), reverse=True)


def test_vanishing_needs_homogeneous_norm():
    with pytest.raises(ValueError):
        vanishing_profiles(Gaussian(), MorreyParams(1, 1.0, 0.5, "inhomogeneous"))


@pytest.mark.parametrize("k", list(range(1, 21, 3)))
def test_phi_counting_bound_holds(k):
    r = 2.0**k
    sup, _ = phi_bound_check(40, P21, r)
    assert sup <= phi_counting_bound(P21, r) * (1 + 1e-9)


def test_phi_single_ball_value():
    # a radius-2 disc holds at most one of the unit discs: pi / 2
    sup, _ = phi_bound_check(40, P21, 2.0)
    assert sup == pytest.approx(math.pi / 2, rel=1e-6)


def test_phi_small_radius_bound():
    for k in (-6, -2, 0):
        sup, bound = phi_small_radius_check(40, P21, 2.0**k)
        # small balls fit inside one unit disc, so the bound is attained
        assert sup == pytest.approx(bound, rel=1e-9)


def test_phi_argument_checks():
    with pytest.raises(RangeError):
        phi_bound_check(40, P21, 1.0)
    with pytest.raises(RangeError):
        phi_small_radius_check(40, P21, 2.0)
    with pytest.raises(ValueError):
        phi_bound_check(4, P21, 16.0)
    with pytest.raises(ValueError):
        phi_bound_check(40, MorreyParams(2, 1.0, 0.0), 4.0)


def test_phi_truncation_profile_is_constant():
    prof = truncation_profile(BallSumPhi(30, 2), 1.0, [2, 64, 4096])
    assert np.allclose(prof.values(), math.pi, rtol=1e-6)


@settings(max_examples=8, deadline=None)
@given(N=st.floats(0.5, 8), c=st.floats(0.1, 3))
def test_triangle_inequalities(N, c):
    # the arithmetic behind closedness: A(f + c g)^(1/p) <= A(f)^(1/p) + c A(g)^(1/p), likewise for the norm
    f, g = Gaussian(1.0, 1), Gaussian(0.5, 1)
    h = Sum((f, g), (1.0, c))
    p = 2.0
    params, cfg = MorreyParams(1, p, 0.5), SearchConfig(k_min=-6, k_max=6)
    A = [truncation_functional(u, p, N, cfg) ** (1 / p) for u in (h, f, g)]
    assert A[0] <= (A[1] + c * A[2]) * (1 + 1e-9)
    est = [morrey_norm(u, params, cfg)[0] for u in (h, f, g)]
    assert est[0] <= (est[1] + c * est[2]) * (1 + 1e-9)
