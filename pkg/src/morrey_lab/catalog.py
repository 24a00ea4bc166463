"""Closed catalog of symbolic functions on R^n, n in {1, 2, 3}.

Every descriptor is an immutable value that can be evaluated pointwise
(vectorised over arrays of shape ``(..., n)``), reports where it blows up or
jumps, and, where a closed form exists, integrates ``|f|^p`` over balls
exactly.  New functions are built only by combining catalog members.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

from .errors import DimensionMismatch, Divergent, SingularPoint
from .geometry import ball_volume, intersection_volume, sphere_area

DIMENSIONS = (1, 2, 3)


def _check_dim(n):
    if n not in DIMENSIONS:
        raise DimensionMismatch(f"dimension must be one of {DIMENSIONS}, got {n}")


def _point(x, n=None):
    arr = tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))
    if n is not None and len(arr) != n:
        raise DimensionMismatch(f"expected a point in R^{n}, got {len(arr)} coordinates")
    return arr


def _norm(pts):
    return np.sqrt(np.sum(np.asarray(pts, dtype=float) ** 2, axis=-1))


@dataclass(frozen=True)
class TailDecay:
    """Majorant |f(y)| <= const * |y|^-exponent for |y| >= start.

    ``exact`` means the majorant is also the true asymptotic order, so a
    divergent majorant integral implies a divergent integral.
    """

    const: float
    exponent: float
    start: float = 1.0
    exact: bool = False


@dataclass(frozen=True)
class SingularitySet:
    """Points where |f| is unbounded, plus spheres across which f jumps.

    ``exponents[i]`` is the local blow-up order at ``points[i]``:
    |f(y)| ~ |y - points[i]|^-exponents[i].
    """

    points: tuple = ()
    exponents: tuple = ()
    spheres: tuple = ()  # ((center, radius), ...)

    def representative_points(self):
        reps = []
        for center, radius in self.spheres:
            c = np.asarray(center)
            for i in range(len(center)):
                e = np.zeros(len(center))
                e[i] = radius
                reps.append(tuple(c + e))
                reps.append(tuple(c - e))
        return reps

    def merged(self, other):
        pts = dict(zip(self.points, self.exponents))
        for p, e in zip(other.points, other.exponents):
            pts[p] = max(e, pts.get(p, 0.0))
        spheres = tuple(dict.fromkeys(self.spheres + other.spheres))
        return SingularitySet(tuple(pts), tuple(pts.values()), spheres)


class Function:
    """Common protocol of catalog descriptors."""

    n: int
    is_radial = False
    # |f| is radial and non-increasing in |y|, with f of one sign; then every
    # ball average is largest for the ball centred at the origin
    abs_decreasing = False
    # pointwise evaluation is cheap enough for adaptive 1-D quadrature
    cheap = True

    def values(self, pts):
        raise NotImplementedError

    def singularities(self):
        return SingularitySet()

    def support_radius(self):
        """Radius R with f = 0 outside B(0, R); ``inf`` if not compact."""
        return math.inf

    def tail_decay(self):
        return None

    def ball_integral(self, center, r, p):
        """Exact integral of |f|^p over B(center, r), or None if unavailable."""
        if self.is_radial and self.cheap and not np.any(np.asarray(center, dtype=float)):
            return self.radial_integral(r, p)
        return None

    # radial members override radial_values/radial_breaks
    def radial_values(self, s):
        raise NotImplementedError

    def radial_breaks(self):
        return ()

    def radial_integral(self, r, p):
        """Integral of |f|^p over B(0, r) by 1-D adaptive quadrature in |y|."""
        n = self.n
        sing = self.singularities()
        e0 = 0.0
        for pt, e in zip(sing.points, sing.exponents):
            if not any(pt):
                e0 = e
        if e0 * p >= n:
            raise Divergent(f"|f|^p is not integrable at the origin (exponent {e0 * p} >= {n})", e0 * p)
        cuts = sorted({0.0, r, *[b for b in self.radial_breaks() if 0 < b < r]})

        def g(s):
            return abs(float(self.radial_values(np.array([s]))[0])) ** p * s ** (n - 1)

        total = 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, _ = integrate.quad(g, a, b, limit=200, epsabs=0.0, epsrel=1e-12)
            total += val
        return sphere_area(n) * total

    def seeds(self):
        sing = self.singularities()
        pts = list(sing.points) + [c for c, _ in sing.spheres]
        return list(dict.fromkeys(pts))

    def to_dict(self):
        raise NotImplementedError

    def __add__(self, other):
        return Sum((self, other))

    def __sub__(self, other):
        return Sum((self, other), (1.0, -1.0))


def exact_ball_power_integral(alpha: float, p: float, n: int, r: float) -> float:
    """Integral of |y|^(-alpha*p) over B(0, r) in R^n."""
    if r <= 0:
        raise ValueError("radius must be positive")
    e = n - alpha * p
    if e <= 0:
        raise Divergent(f"alpha*p = {alpha * p} >= n = {n}: integral diverges at the origin", alpha * p)
    return sphere_area(n) * r**e / e


def _shell_power_integral(alpha, p, n, a, b):
    """Integral of |y|^(-alpha*p) over the shell a <= |y| < b."""
    if b <= a:
        return 0.0
    e = n - alpha * p
    if e == 0:
        return sphere_area(n) * math.log(b / a)
    return sphere_area(n) * (b**e - a**e) / e


@dataclass(frozen=True)
class Zero(Function):
    n: int = 1

    def __post_init__(self):
        _check_dim(self.n)

    is_radial = True
    abs_decreasing = True

    def values(self, pts):
        return np.zeros(np.shape(pts)[:-1])

    def radial_values(self, s):
        return np.zeros(np.shape(s))

    def support_radius(self):
        return 0.0

    def ball_integral(self, center, r, p):
        return 0.0

    def tail_decay(self):
        return TailDecay(0.0, math.inf, 0.0, True)

    def to_dict(self):
        return {"fn": "zero", "n": self.n}


@dataclass(frozen=True)
class Constant(Function):
    c: float = 1.0
    n: int = 1

    def __post_init__(self):
        _check_dim(self.n)

    is_radial = True
    abs_decreasing = True

    def values(self, pts):
        return np.full(np.shape(pts)[:-1], float(self.c))

    def radial_values(self, s):
        return np.full(np.shape(s), float(self.c))

    def ball_integral(self, center, r, p):
        return abs(self.c) ** p * ball_volume(self.n, r)

    def tail_decay(self):
        return TailDecay(abs(self.c), 0.0, 0.0, self.c != 0)

    def to_dict(self):
        return {"fn": "constant", "c": self.c, "n": self.n}


@dataclass(frozen=True)
class RadialPower(Function):
    """|y|^-alpha."""

    alpha: float
    n: int = 1

    def __post_init__(self):
        _check_dim(self.n)

    is_radial = True

    @property
    def abs_decreasing(self):
        return self.alpha >= 0

    def values(self, pts):
        with np.errstate(divide="ignore", invalid="ignore"):
            return _norm(pts) ** (-float(self.alpha))

    def radial_values(self, s):
        with np.errstate(divide="ignore"):
            return np.asarray(s, dtype=float) ** (-float(self.alpha))

    def singularities(self):
        if self.alpha > 0:
            return SingularitySet(((0.0,) * self.n,), (float(self.alpha),))
        return SingularitySet()

    def radial_integral(self, r, p):
        return exact_ball_power_integral(self.alpha, p, self.n, r)

    def tail_decay(self):
        return TailDecay(1.0, float(self.alpha), 0.0, True)

    def to_dict(self):
        return {"fn": "radial_power", "alpha": self.alpha, "n": self.n}


@dataclass(frozen=True)
class PiecewiseRadialPower(Function):
    """|y|^-alpha on |y| <= 1 and |y|^-beta outside."""

    alpha: float
    beta: float
    n: int = 1

    def __post_init__(self):
        _check_dim(self.n)

    is_radial = True

    @property
    def abs_decreasing(self):
        return self.alpha >= 0 and self.beta >= 0

    def values(self, pts):
        return self.radial_values(_norm(pts))

    def radial_values(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(s <= 1.0, s ** (-float(self.alpha)), s ** (-float(self.beta)))

    def radial_breaks(self):
        return (1.0,)

    def singularities(self):
        pts = ((0.0,) * self.n,) if self.alpha > 0 else ()
        exps = (float(self.alpha),) if self.alpha > 0 else ()
        return SingularitySet(pts, exps, (((0.0,) * self.n, 1.0),))

    def radial_integral(self, r, p):
        inner = exact_ball_power_integral(self.alpha, p, self.n, min(r, 1.0))
        return inner + _shell_power_integral(self.beta, p, self.n, 1.0, r)

    def tail_decay(self):
        return TailDecay(1.0, float(self.beta), 1.0, True)

    def to_dict(self):
        return {"fn": "piecewise_radial", "alpha": self.alpha, "beta": self.beta, "n": self.n}


@dataclass(frozen=True)
class BallIndicator(Function):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center))
        _check_dim(len(self.center))
        if self.radius <= 0:
            raise ValueError("indicator radius must be positive")

    @property
    def n(self):
        return len(self.center)

    @property
    def is_radial(self):
        return not any(self.center)

    @property
    def abs_decreasing(self):
        return self.is_radial

    def values(self, pts):
        return (_norm(np.asarray(pts) - np.asarray(self.center)) < self.radius).astype(float)

    def radial_values(self, s):
        return (np.asarray(s) < self.radius).astype(float)

    def radial_breaks(self):
        return (float(self.radius),)

    def singularities(self):
        return SingularitySet(spheres=((self.center, float(self.radius)),))

    def support_radius(self):
        return float(np.linalg.norm(self.center)) + self.radius

    def ball_integral(self, center, r, p):
        d = float(np.linalg.norm(np.asarray(center, dtype=float) - np.asarray(self.center)))
        return float(intersection_volume(d, r, self.radius, self.n))

    def tail_decay(self):
        return TailDecay(0.0, math.inf, self.support_radius(), True)

    def to_dict(self):
        return {"fn": "ball_indicator", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class BallSumPhi(Function):
    """Sum of indicators of the unit balls B(2^k e_1, 1), k = 2..K."""

    K: int = 40
    n: int = 2

    def __post_init__(self):
        _check_dim(self.n)
        if self.K < 2:
            raise ValueError("K must be at least 2")

    @cached_property
    def centers(self):
        c = np.zeros((self.K - 1, self.n))
        c[:, 0] = 2.0 ** np.arange(2, self.K + 1)
        return c

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        x1 = pts[..., 0]
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.rint(np.log2(np.where(x1 > 0, x1, 1.0)))
        k = np.clip(k, 2, self.K)
        shifted = pts.copy()
        shifted[..., 0] = x1 - 2.0**k
        return (_norm(shifted) < 1.0).astype(float)

    def singularities(self):
        return SingularitySet(spheres=tuple((tuple(c), 1.0) for c in self.centers))

    def ball_integral(self, center, r, p):
        d = np.linalg.norm(self.centers - np.asarray(center, dtype=float), axis=1)
        near = d < r + 1.0
        if not np.any(near):
            return 0.0
        return float(np.sum(intersection_volume(d[near], r, 1.0, self.n)))

    def to_dict(self):
        return {"fn": "ball_sum_phi", "K": self.K, "n": self.n}


@dataclass(frozen=True)
class Gaussian(Function):
    """Centred normal density with covariance sigma^2 I (unit mass)."""

    sigma: float = 1.0
    n: int = 1

    def __post_init__(self):
        _check_dim(self.n)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    is_radial = True
    abs_decreasing = True

    @property
    def peak(self):
        return (2 * math.pi * self.sigma**2) ** (-self.n / 2)

    def values(self, pts):
        return self.radial_values(_norm(pts))

    def radial_values(self, s):
        s = np.asarray(s, dtype=float)
        return self.peak * np.exp(-(s**2) / (2 * self.sigma**2))

    def singularities(self):
        # no blow-up; the centre is reported (order 0) as the point the mass concentrates around
        return SingularitySet(((0.0,) * self.n,), (0.0,))

    def radial_breaks(self):
        return (8.0 * self.sigma,)

    def radial_integral(self, r, p):
        scale = 2 * math.pi * self.sigma**2 / p
        return self.peak**p * scale ** (self.n / 2) * special.gammainc(self.n / 2, p * r * r / (2 * self.sigma**2))

    def ball_integral(self, center, r, p):
        # |f|^p is a multiple of a normal density with variance v = sigma^2/p;
        # integrate its axial marginal against the transverse chi-square cdf
        d = float(np.linalg.norm(np.asarray(center, dtype=float)))
        if d == 0.0:
            return self.radial_integral(r, p)
        v = self.sigma**2 / p
        s = math.sqrt(v)
        mass = self.peak**p * (2 * math.pi * v) ** (self.n / 2)
        lo, hi = max(-r, d - 40 * s), min(r, d + 40 * s)
        if lo >= hi:
            return 0.0
        if self.n == 1:
            prob = special.ndtr((hi - d) / s) - special.ndtr((lo - d) / s)
        else:
            def axial(z):
                return math.exp(-0.5 * ((z - d) / s) ** 2) * special.gammainc((self.n - 1) / 2, (r * r - z * z) / (2 * v))

            pts = [z for z in (d,) if lo < z < hi]
            with warnings.catch_warnings():
                # roundoff warnings only occur when the probability is negligible
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                prob, _ = integrate.quad(axial, lo, hi, points=pts or None, limit=200, epsabs=1e-16, epsrel=1e-11)
            prob /= s * math.sqrt(2 * math.pi)
        return mass * float(prob)

    def tail_decay(self):
        # sup_s s^a exp(-s^2 / 2 sigma^2) = (a sigma^2 / e)^(a/2)
        a = 4.0 * self.n + 8.0
        return TailDecay(self.peak * (a * self.sigma**2 / math.e) ** (a / 2), a, 0.0, False)

    def to_dict(self):
        return {"fn": "gaussian", "sigma": self.sigma, "n": self.n}


@dataclass(frozen=True)
class SmoothBump(Function):
    """exp(1 - 1/(1 - |y/R|^2)) on |y| < R, zero outside; peak value 1."""

    radius: float = 1.0
    n: int = 1

    def __post_init__(self):
        _check_dim(self.n)
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")

    is_radial = True
    abs_decreasing = True

    def values(self, pts):
        return self.radial_values(_norm(pts))

    def radial_values(self, s):
        u = np.asarray(s, dtype=float) / self.radius
        inside = u < 1.0
        out = np.zeros(u.shape)
        with np.errstate(divide="ignore", over="ignore"):
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return out

    def support_radius(self):
        return float(self.radius)

    def radial_breaks(self):
        return (float(self.radius),)

    def singularities(self):
        # not a jump, but the edge of the support is where smoothness of the
        # quadrature integrand ends
        return SingularitySet(spheres=(((0.0,) * self.n, float(self.radius)),))

    @cached_property
    def mass(self):
        return self.radial_integral(self.radius, 1.0)

    def tail_decay(self):
        return TailDecay(0.0, math.inf, float(self.radius), True)

    def to_dict(self):
        return {"fn": "smooth_bump", "radius": self.radius, "n": self.n}


@dataclass(frozen=True)
class Sum(Function):
    terms: tuple
    weights: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("Sum needs at least one term")
        if self.weights is None:
            object.__setattr__(self, "weights", (1.0,) * len(self.terms))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) != len(self.terms):
            raise ValueError("one weight per term")
        if len({t.n for t in self.terms}) != 1:
            raise DimensionMismatch("all terms of a Sum must share the dimension")

    @property
    def n(self):
        return self.terms[0].n

    @property
    def is_radial(self):
        return all(t.is_radial for t in self.terms)

    @property
    def cheap(self):
        return all(t.cheap for t in self.terms)

    @property
    def abs_decreasing(self):
        live = [t for w, t in zip(self.weights, self.terms) if w]
        return len(live) == 1 and live[0].abs_decreasing

    def values(self, pts):
        out = np.zeros(np.shape(pts)[:-1])
        for w, t in zip(self.weights, self.terms):
            if w:
                out = out + w * t.values(pts)
        return out

    def radial_values(self, s):
        out = np.zeros(np.shape(s))
        for w, t in zip(self.weights, self.terms):
            if w:
                out = out + w * t.radial_values(s)
        return out

    def radial_breaks(self):
        return tuple(sorted({b for t in self.terms for b in t.radial_breaks()}))

    def singularities(self):
        out = SingularitySet()
        for w, t in zip(self.weights, self.terms):
            if w:
                out = out.merged(t.singularities())
        return out

    def support_radius(self):
        return max(t.support_radius() for w, t in zip(self.weights, self.terms) if w) if any(self.weights) else 0.0

    def ball_integral(self, center, r, p):
        live = [(w, t) for w, t in zip(self.weights, self.terms) if w]
        if not live:
            return 0.0
        if len(live) == 1:
            w, t = live[0]
            val = t.ball_integral(center, r, p)
            return None if val is None else abs(w) ** p * val
        return super().ball_integral(center, r, p)

    def tail_decay(self):
        decays = [t.tail_decay() for w, t in zip(self.weights, self.terms) if w]
        if not decays or any(d is None for d in decays):
            return None
        a = min(d.exponent for d in decays)
        start = max(max(d.start for d in decays), 1.0)
        const = sum(abs(w) * d.const * start ** (a - d.exponent) if math.isfinite(d.exponent) else 0.0
                    for w, d in zip(self.weights, decays))
        return TailDecay(const, a, start, len(decays) == 1 and decays[0].exact)

    def to_dict(self):
        return {"fn": "sum", "terms": [t.to_dict() for t in self.terms], "weights": list(self.weights)}


@dataclass(frozen=True)
class Scaled(Function):
    """y -> inner(t * y)."""

    inner: Function
    t: float

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError("scale factor must be positive")

    @property
    def n(self):
        return self.inner.n

    @property
    def is_radial(self):
        return self.inner.is_radial

    @property
    def cheap(self):
        return self.inner.cheap

    @property
    def abs_decreasing(self):
        return self.inner.abs_decreasing

    def values(self, pts):
        return self.inner.values(self.t * np.asarray(pts, dtype=float))

    def radial_values(self, s):
        return self.inner.radial_values(self.t * np.asarray(s, dtype=float))

    def radial_breaks(self):
        return tuple(b / self.t for b in self.inner.radial_breaks())

    def singularities(self):
        s = self.inner.singularities()
        return SingularitySet(
            tuple(tuple(c / self.t for c in p) for p in s.points),
            s.exponents,
            tuple((tuple(c / self.t for c in ctr), rad / self.t) for ctr, rad in s.spheres),
        )

    def support_radius(self):
        return self.inner.support_radius() / self.t

    def ball_integral(self, center, r, p):
        val = self.inner.ball_integral(self.t * np.asarray(center, dtype=float), self.t * r, p)
        return None if val is None else val * self.t ** (-self.n)

    def tail_decay(self):
        d = self.inner.tail_decay()
        if d is None:
            return None
        const = d.const * self.t ** (-d.exponent) if math.isfinite(d.exponent) else d.const
        return TailDecay(const, d.exponent, d.start / self.t, d.exact)

    def to_dict(self):
        return {"fn": "scaled", "inner": self.inner.to_dict(), "t": self.t}


@dataclass(frozen=True)
class Translated(Function):
    """y -> inner(y - shift)."""

    inner: Function
    shift: tuple

    def __post_init__(self):
        object.__setattr__(self, "shift", _point(self.shift, self.inner.n))

    @property
    def n(self):
        return self.inner.n

    @property
    def is_radial(self):
        return self.inner.is_radial and not any(self.shift)

    @property
    def cheap(self):
        return self.inner.cheap

    @property
    def abs_decreasing(self):
        return self.inner.abs_decreasing and not any(self.shift)

    def values(self, pts):
        return self.inner.values(np.asarray(pts, dtype=float) - np.asarray(self.shift))

    def radial_values(self, s):
        return self.inner.radial_values(s)

    def radial_breaks(self):
        return self.inner.radial_breaks()

    def singularities(self):
        s = self.inner.singularities()
        xi = np.asarray(self.shift)
        return SingularitySet(
            tuple(tuple(np.asarray(p) + xi) for p in s.points),
            s.exponents,
            tuple((tuple(np.asarray(c) + xi), rad) for c, rad in s.spheres),
        )

    def support_radius(self):
        return self.inner.support_radius() + float(np.linalg.norm(self.shift))

    def ball_integral(self, center, r, p):
        return self.inner.ball_integral(np.asarray(center, dtype=float) - np.asarray(self.shift), r, p)

    def tail_decay(self):
        d = self.inner.tail_decay()
        if d is None or not any(self.shift):
            return d
        xi = float(np.linalg.norm(self.shift))
        if not math.isfinite(d.exponent):
            return TailDecay(d.const, d.exponent, d.start + xi, d.exact)
        # |y - shift| >= |y| / 2 once |y| >= 2 |shift|
        return TailDecay(d.const * 2.0**d.exponent, d.exponent, max(2 * xi, d.start + xi), d.exact)

    def to_dict(self):
        return {"fn": "translated", "inner": self.inner.to_dict(), "shift": list(self.shift)}


def _restrict_singularities(s, n, k, keep_inside):
    pts, exps = [], []
    for p, e in zip(s.points, s.exponents):
        r = float(np.linalg.norm(p))
        if (r <= k) if keep_inside else (r >= k):
            pts.append(p)
            exps.append(e)
    spheres = tuple(dict.fromkeys(s.spheres + (((0.0,) * n, float(k)),)))
    return SingularitySet(tuple(pts), tuple(exps), spheres)


@dataclass(frozen=True)
class ExteriorTruncated(Function):
    """inner on the open ball B(0, k), zero outside."""

    inner: Function
    k: float

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("cutoff radius must be positive")

    @property
    def n(self):
        return self.inner.n

    @property
    def is_radial(self):
        return self.inner.is_radial

    @property
    def cheap(self):
        return self.inner.cheap

    @property
    def abs_decreasing(self):
        return self.inner.abs_decreasing

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        inside = _norm(pts) < self.k
        out = np.zeros(inside.shape)
        if np.any(inside):
            out[inside] = self.inner.values(pts[inside])
        return out

    def radial_values(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s < self.k, self.inner.radial_values(s), 0.0)

    def radial_breaks(self):
        return tuple(sorted({*self.inner.radial_breaks(), float(self.k)}))

    def singularities(self):
        return _restrict_singularities(self.inner.singularities(), self.n, self.k, True)

    def support_radius(self):
        return min(self.inner.support_radius(), float(self.k))

    def ball_integral(self, center, r, p):
        d = float(np.linalg.norm(center))
        if d + r <= self.k:
            return self.inner.ball_integral(center, r, p)
        if d >= r + self.k:
            return 0.0
        if self.inner.is_radial and d == 0.0:
            return self.inner.ball_integral(center, self.k, p)
        return None

    def tail_decay(self):
        return TailDecay(0.0, math.inf, float(self.k), True)

    def to_dict(self):
        return {"fn": "truncated", "inner": self.inner.to_dict(), "k": self.k}


@dataclass(frozen=True)
class Tail(Function):
    """inner outside the open ball B(0, k), zero inside: f - ball_truncate(f, k)."""

    inner: Function
    k: float

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("cutoff radius must be non-negative")

    @property
    def n(self):
        return self.inner.n

    @property
    def is_radial(self):
        return self.inner.is_radial

    @property
    def cheap(self):
        return self.inner.cheap

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        outside = _norm(pts) >= self.k
        out = np.zeros(outside.shape)
        if np.any(outside):
            out[outside] = self.inner.values(pts[outside])
        return out

    def radial_values(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= self.k, self.inner.radial_values(s), 0.0)

    def radial_breaks(self):
        return tuple(sorted({*self.inner.radial_breaks(), float(self.k)}))

    def singularities(self):
        return _restrict_singularities(self.inner.singularities(), self.n, self.k, False)

    def support_radius(self):
        return self.inner.support_radius() if self.inner.support_radius() > self.k else 0.0

    def ball_integral(self, center, r, p):
        d = float(np.linalg.norm(center))
        if d - r >= self.k:
            return self.inner.ball_integral(center, r, p)
        if d + r <= self.k:
            return 0.0
        if self.inner.is_radial and d == 0.0:
            whole = self.inner.ball_integral(center, r, p)
            core = self.inner.ball_integral(center, self.k, p)
            if whole is not None and core is not None:
                return max(whole - core, 0.0)
        return None

    def tail_decay(self):
        d = self.inner.tail_decay()
        if d is None:
            return None
        return TailDecay(d.const, d.exponent, max(d.start, float(self.k)), d.exact)

    def to_dict(self):
        return {"fn": "tail", "inner": self.inner.to_dict(), "k": self.k}


def evaluate(f: Function, x) -> float:
    """Pointwise value f(x); raises at declared singular points."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != f.n:
        raise DimensionMismatch(f"point has {x.shape[0]} coordinates, function lives in R^{f.n}")
    sing = f.singularities()
    for s, e in zip(sing.points, sing.exponents):
        if e > 0 and np.linalg.norm(x - np.asarray(s)) <= 1e-12 * max(1.0, float(np.linalg.norm(s))):
            raise SingularPoint(f"{tuple(x)} is a singular point of {f.to_dict()['fn']}")
    return float(f.values(x[None, :])[0])


def ball_truncate(f: Function, k: float) -> Function:
    """f on B(0, k) and zero outside."""
    if k <= 0:
        raise ValueError("cutoff radius must be positive")
    if isinstance(f, ExteriorTruncated):
        return ExteriorTruncated(f.inner, min(f.k, k))
    if f.support_radius() <= k:
        return f
    return ExteriorTruncated(f, k)


def _from_dict(d):
    if not isinstance(d, dict) or "fn" not in d:
        raise ValueError(f"descriptor must be an object with an 'fn' key, got {d!r}")
    d = dict(d)
    kind = d.pop("fn")
    builders = {
        "zero": lambda n=1: Zero(int(n)),
        "constant": lambda c=1.0, n=1: Constant(float(c), int(n)),
        "radial_power": lambda alpha, n=1: RadialPower(float(alpha), int(n)),
        "piecewise_radial": lambda alpha, beta, n=1: PiecewiseRadialPower(float(alpha), float(beta), int(n)),
        "ball_indicator": lambda center, radius: BallIndicator(tuple(center), float(radius)),
        "ball_sum_phi": lambda K=40, n=2: BallSumPhi(int(K), int(n)),
        "gaussian": lambda sigma=1.0, n=1: Gaussian(float(sigma), int(n)),
        "smooth_bump": lambda radius=1.0, n=1: SmoothBump(float(radius), int(n)),
        "sum": lambda terms, weights=None: Sum(tuple(_from_dict(t) for t in terms), weights),
        "scaled": lambda inner, t: Scaled(_from_dict(inner), float(t)),
        "translated": lambda inner, shift: Translated(_from_dict(inner), tuple(shift)),
        "truncated": lambda inner, k: ExteriorTruncated(_from_dict(inner), float(k)),
        "tail": lambda inner, k: Tail(_from_dict(inner), float(k)),
    }
    if kind not in builders:
        raise ValueError(f"unknown function kind {kind!r}")
    try:
        return builders[kind](**d)
    except TypeError as exc:
        raise ValueError(f"bad fields for {kind!r}: {exc}") from None


def from_dict(d) -> Function:
    """Build a descriptor from its config grammar, e.g. {"fn": "gaussian", "sigma": 1, "n": 2}."""
    return _from_dict(d)
