"""Truncation functional, decay profiles and advisory vanishing-class flags.

Limits cannot be certified from finitely many numbers, so every class gets a
flag in {holds, fails, inconclusive} computed from the tail of a profile:

* holds: the last three points are non-increasing and the final one is below
  ``HOLD_FRACTION`` times the p-th power of the norm estimate;
* fails: the last three points stay within ``FLAT_TOLERANCE`` of a positive
  constant;
* inconclusive otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import BallSumPhi, Function, Tail
from .core import MorreyParams, SearchConfig, average_profile, morrey_norm, sup_average
from .errors import RangeError
from .geometry import ball_volume, integer_cover_count

HOLDS, FAILS, INCONCLUSIVE = "holds", "fails", "inconclusive"
HOLD_FRACTION = 1e-2
FLAT_TOLERANCE = 0.10
DEFAULT_N_SCHEDULE = tuple(2**j for j in range(1, 13))

FLAG_RULES = {
    HOLDS: f"last three points non-increasing and final <= {HOLD_FRACTION:g} * norm^p",
    FAILS: f"last three points within {FLAT_TOLERANCE:.0%} of a positive constant",
    INCONCLUSIVE: "neither rule applies",
}


@dataclass(frozen=True)
class ExtendedCutoff:
    """chi_a: indicator of the complement of B(0, a) for a > 0, identically 1 for a <= 0."""

    a: float

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.a <= 0:
            return np.ones(pts.shape[:-1])
        return (np.linalg.norm(pts, axis=-1) >= self.a).astype(float)

    def apply(self, f: Function) -> Function:
        return Tail(f, float(self.a)) if self.a > 0 else f


@dataclass
class TruncationProfile:
    p: float
    entries: dict = field(default_factory=dict)  # N -> value

    def schedule(self):
        return sorted(self.entries)

    def values(self):
        return np.array([self.entries[N] for N in self.schedule()])

    def rows(self):
        return [[N, self.entries[N]] for N in self.schedule()]


@dataclass
class VanishingReport:
    norm: float
    params: MorreyParams
    v0_profile: list  # ProfileEntry, radius decreasing
    vinf_profile: list  # ProfileEntry, radius increasing
    truncation: TruncationProfile
    flags: dict
    confidence: dict

    def to_dict(self):
        def entries(xs):
            return [[e.k, e.radius, e.sup, list(e.center)] for e in xs]

        return {
            "norm": self.norm,
            "flags": dict(self.flags),
            "confidence": self.confidence,
            "v0_profile": entries(self.v0_profile),
            "vinf_profile": entries(self.vinf_profile),
            "truncation_profile": self.truncation.rows(),
        }


def _cutoff(N):
    return N if isinstance(N, ExtendedCutoff) else ExtendedCutoff(float(N))


def truncation_functional(f: Function, p: float, N, cfg: SearchConfig | None = None) -> float:
    """sup over candidate centres x of the integral of |f|^p chi_N over B(x, 1)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    cfg = cfg or SearchConfig()
    g = _cutoff(N).apply(f)
    if g.support_radius() == 0.0:
        return 0.0
    prof = average_profile(g, MorreyParams(f.n, p, 0.0), cfg, ks=[0])
    return prof.entries[0].sup


def truncation_profile(f: Function, p: float, schedule=DEFAULT_N_SCHEDULE, cfg: SearchConfig | None = None):
    prof = TruncationProfile(p)
    for N in schedule:
        prof.entries[N] = truncation_functional(f, p, N, cfg)
    return prof


def uniform_truncation_check(f: Function, p: float, N, R0: float = 1.0, cfg: SearchConfig | None = None):
    """(lhs, K0): lhs = sup over centres and dyadic r <= R0 of the integral of
    |f|^p chi_N over B(x, r); K0 = unit balls at integer points covering B(x, R0)."""
    if R0 <= 0:
        raise ValueError("R0 must be positive")
    cfg = cfg or SearchConfig()
    k0 = integer_cover_count(f.n, R0)
    g = _cutoff(N).apply(f)
    if g.support_radius() == 0.0:
        return 0.0, k0
    k_hi = math.floor(math.log2(R0))
    ks = range(min(cfg.k_min, k_hi), k_hi + 1)
    prof = average_profile(g, MorreyParams(f.n, p, 0.0), cfg, ks=ks)
    return float(np.max(prof.values())), k0


def flag(values, norm_p):
    """Advisory flag from the last three points of a profile (see module docs)."""
    tail = np.asarray(values, dtype=float)[-3:]
    if tail.size < 3:
        return INCONCLUSIVE
    if np.all(np.diff(tail) <= 0) and tail[-1] <= HOLD_FRACTION * norm_p:
        return HOLDS
    lo, hi = float(tail.min()), float(tail.max())
    if lo > 0 and hi <= (1 + FLAT_TOLERANCE) * lo:
        return FAILS
    return INCONCLUSIVE


def decay_fit(x, y, points=5):
    """Least-squares slope of log y against log x over the last ``points``
    positive entries, with the RMS residual; None entries when undefined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0)
    x, y = x[keep][-points:], y[keep][-points:]
    if x.size < 2:
        return {"slope": None, "residual": None, "points": int(x.size)}
    A = np.stack([np.log(x), np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    resid = np.log(y) - A @ coef
    return {"slope": float(coef[0]), "residual": float(np.sqrt(np.mean(resid**2))), "points": int(x.size)}


def combine(flags):
    if all(v == HOLDS for v in flags):
        return HOLDS
    if any(v == FAILS for v in flags):
        return FAILS
    return INCONCLUSIVE


def vanishing_profiles(f: Function, params: MorreyParams, cfg: SearchConfig | None = None,
                       schedule=DEFAULT_N_SCHEDULE) -> VanishingReport:
    if not params.homogeneous:
        raise ValueError("vanishing diagnostics use the homogeneous norm")
    cfg = cfg or SearchConfig()
    norm, profile = morrey_norm(f, params, cfg)
    norm_p = norm**params.p
    small = [e for e in profile.entries if e.k <= 0][::-1]
    large = [e for e in profile.entries if e.k >= 0]
    trunc = truncation_profile(f, params.p, schedule, cfg)
    flags = {
        "V0": flag([e.sup for e in small], norm_p),
        "VInf": flag([e.sup for e in large], norm_p),
        "VStar": flag(trunc.values(), norm_p),
    }
    flags["VClass"] = combine(list(flags.values()))
    confidence = {
        "V0": decay_fit([1 / e.radius for e in small], [e.sup for e in small]),
        "VInf": decay_fit([e.radius for e in large], [e.sup for e in large]),
        "VStar": decay_fit(trunc.schedule(), trunc.values()),
    }
    return VanishingReport(norm, params, small, large, trunc, flags, confidence)


def _check_phi_cap(K, r):
    if 2.0**K < 8 * r:
        raise ValueError(f"BallSumPhi cap K={K} is too small for radius {r:g}; need 2^K >= 8r")


def phi_bound_check(K: int, params: MorreyParams, r: float, cfg: SearchConfig | None = None):
    """(sup estimate, log(4r)/r^lam) for the ball-sum counterexample at radius r > 1."""
    if r <= 1:
        raise RangeError(f"radius must exceed 1, got {r}")
    if params.lam <= 0:
        raise ValueError("the bound needs lambda > 0")
    _check_phi_cap(K, r)
    entry = sup_average(BallSumPhi(K, params.n), params, r, cfg)
    return entry.sup, math.log(4 * r) / r**params.lam


def phi_counting_bound(params: MorreyParams, r: float) -> float:
    """Upper bound for sup_x M(phi; x, r) from counting the unit balls a ball of
    radius r can meet: their centres 2^k e1 lie in an interval of length
    2r + 2, so at most log2(2r + 2) of them (for r >= 1); each contributes at
    most |B(0,1)|, and the total never exceeds |B(x, r)|."""
    count = math.log2(2 * r + 2) if r >= 1 else 1.0
    return ball_volume(params.n) * min(count, r**params.n) / r**params.lam


def phi_small_radius_check(K: int, params: MorreyParams, r: float, cfg: SearchConfig | None = None):
    """(sup estimate, C r^(n - lam)) with C = |B(0,1)| for radii r <= 1."""
    if r > 1:
        raise RangeError(f"small-radius bound needs r <= 1, got {r}")
    _check_phi_cap(K, 1.0)
    entry = sup_average(BallSumPhi(K, params.n), params, r, cfg)
    return entry.sup, ball_volume(params.n) * r ** (params.n - params.lam)
