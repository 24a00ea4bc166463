"""Radial weights, their admissibility tests and weighted Lebesgue norms.

Each weight w(t), t = |x|, carries a majorant ``w(s)^p <= K s^a ln(s)^-b``
for s >= 2 with the true asymptotic order, so convergence of tail integrals
is decided from (a, b) alone and never from the growth of a quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .catalog import Function, SingularitySet, TailDecay
from .core import MorreyParams, SearchConfig, morrey_norm
from .errors import AdmissibilityError, ComputeError, Divergent, QuadratureFailure, SkippedEntry
from .geometry import sphere_area
from .quadrature import QuadratureConfig, ball_power_integrals

R_MAX = 2.0**16
# exponents this close to the critical value count as critical
CRITICAL_TOL = 1e-12
# slack for "g is non-increasing" on the upper half of a grid
ALMOST_SLACK = 1e-2
DEFAULT_GRID = tuple(2.0 ** (j / 8) for j in range(0, 8 * 20 + 1))
_LOG_RATIO = 1.0 + math.log1p(math.e / 2) / math.log(2.0)  # ln(e + s) <= _LOG_RATIO ln s for s >= 2


@dataclass(frozen=True)
class Majorant:
    """w(s)^p <= const * s^power * ln(s)^-log_power for s >= 2."""

    const: float
    power: float
    log_power: float


def _power_factor(e):
    # (1 + s)^e <= c s^e for s >= 2
    return 1.0 if e <= 0 else 1.5**e


def _log_factor(b):
    # ln(e + s)^-b <= c ln(s)^-b for s >= 2
    return 1.0 if b >= 0 else _LOG_RATIO ** (-b)


class Weight:
    """Radial weight protocol."""

    def values(self, t):
        raise NotImplementedError

    def near_origin_constants(self):
        """(lo, hi) with lo <= w(t) <= hi on [0, 1]."""
        raise NotImplementedError

    def majorant(self, p) -> Majorant:
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class PowerWeight(Weight):
    """(1 + t^2)^(alpha/2)."""

    alpha: float

    def values(self, t):
        return (1.0 + np.asarray(t, dtype=float) ** 2) ** (self.alpha / 2)

    def near_origin_constants(self):
        ends = (1.0, 2.0 ** (self.alpha / 2))
        return min(ends), max(ends)

    def majorant(self, p):
        e = self.alpha * p
        # 1 + s^2 <= 1.25 s^2 for s >= 2
        return Majorant(1.0 if e <= 0 else 1.25 ** (e / 2), e, 0.0)

    def to_dict(self):
        return {"weight": "power", "alpha": self.alpha}


@dataclass(frozen=True)
class PlainPower(Weight):
    """(1 + t)^alpha."""

    alpha: float

    def values(self, t):
        return (1.0 + np.asarray(t, dtype=float)) ** self.alpha

    def near_origin_constants(self):
        ends = (1.0, 2.0**self.alpha)
        return min(ends), max(ends)

    def majorant(self, p):
        e = self.alpha * p
        return Majorant(_power_factor(e), e, 0.0)

    def to_dict(self):
        return {"weight": "plain_power", "alpha": self.alpha}


@dataclass(frozen=True)
class PowerLog(Weight):
    """(1 + t)^(-gamma/p) * ln(e + t)^(-beta)."""

    gamma: float
    p: float
    beta: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("weight exponent p must be >= 1")

    def values(self, t):
        t = np.asarray(t, dtype=float)
        return (1.0 + t) ** (-self.gamma / self.p) * np.log(math.e + t) ** (-self.beta)

    def near_origin_constants(self):
        f1 = (1.0, 2.0 ** (-self.gamma / self.p))
        f2 = (1.0, math.log(math.e + 1.0) ** (-self.beta))
        return min(f1) * min(f2), max(f1) * max(f2)

    def majorant(self, p):
        e = -self.gamma * p / self.p
        b = self.beta * p
        return Majorant(_power_factor(e) * _log_factor(b), e, b)

    def to_dict(self):
        return {"weight": "power_log", "gamma": self.gamma, "p": self.p, "beta": self.beta}


def weight_from_dict(d) -> Weight:
    if not isinstance(d, dict) or "weight" not in d:
        raise ValueError(f"weight must be an object with a 'weight' key, got {d!r}")
    d = dict(d)
    kind = d.pop("weight")
    builders = {
        "power": lambda alpha: PowerWeight(float(alpha)),
        "plain_power": lambda alpha: PlainPower(float(alpha)),
        "power_log": lambda gamma, p, beta: PowerLog(float(gamma), float(p), float(beta)),
    }
    if kind not in builders:
        raise ValueError(f"unknown weight kind {kind!r}")
    try:
        return builders[kind](**d)
    except TypeError as exc:
        raise ValueError(f"bad fields for weight {kind!r}: {exc}") from None


def _critical(c):
    return abs(c) <= CRITICAL_TOL


def _tail_integral(const, c, b, start):
    """Integral of const * s^(c-1) * ln(s)^-b over [start, inf), start >= 2; inf if divergent."""
    if const == 0.0:
        return 0.0
    L = math.log(start)
    if _critical(c):
        return const * L ** (1 - b) / (b - 1) if b > 1 else math.inf
    if c > 0:
        return math.inf
    if b >= 0:
        # ln(s)^-b <= L^-b on the range
        return const * L ** (-b) * math.exp(c * L) / (-c)
    a = 1.0 - b
    return const * (-c) ** (-a) * float(special.gammaincc(a, -c * L) * special.gamma(a))


def almost_decreasing_check(w: Weight, p: float, gamma: float, grid=DEFAULT_GRID):
    """(holds, worstRatio) for g(t) = w(t)^p t^gamma on the grid.

    worstRatio = max over grid pairs s >= t of g(s)/g(t).  On a bounded range a
    positive continuous g is always almost decreasing, so ``holds`` is decided
    on the upper half of the grid: g must not rise there by more than
    ``ALMOST_SLACK``.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("grid must be an increasing list of positive radii")
    with np.errstate(over="ignore", divide="ignore"):
        logg = p * np.log(w.values(t)) + gamma * np.log(t)

    def worst(lg):
        suffix = np.maximum.accumulate(lg[::-1])[::-1]
        return float(np.exp(np.max(suffix - lg)))

    ratio = worst(logg)
    tail = worst(logg[t.size // 2:])
    return bool(np.isfinite(ratio) and tail <= 1.0 + ALMOST_SLACK), ratio


def integral_condition(w: Weight, p: float, gamma: float, upper: float = R_MAX):
    """(finite, value) for the integral of w(t)^p t^(gamma-1) over [1, inf).

    ``value`` is the quadrature over [1, upper] plus the analytic majorant
    bound of the rest (an upper bound when the majorant is not exact);
    ``inf`` when the tail diverges.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    m = w.majorant(p)
    c = m.power + gamma
    tail = _tail_integral(m.const, c, m.log_power, upper)
    if not math.isfinite(tail):
        return False, math.inf

    def g(u):
        t = math.exp(u)
        return float(w.values(t)) ** p * t**gamma

    cuts = np.linspace(0.0, math.log(upper), 17)
    body = sum(integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-11, limit=200)[0] for a, b in zip(cuts[:-1], cuts[1:]))
    return True, float(body + tail)


@dataclass(frozen=True, eq=False)
class _WeightedPower(Function):
    """y -> f(y) w(|y|)^p raised to 1/p, so that |.|^p integrates to the weighted norm."""

    f: Function
    w: Weight
    p: float

    @property
    def n(self):
        return self.f.n

    @property
    def is_radial(self):
        return self.f.is_radial

    @property
    def cheap(self):
        return self.f.cheap

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        return self.f.values(pts) * self.w.values(np.sqrt(np.sum(pts**2, axis=-1)))

    def radial_values(self, s):
        s = np.asarray(s, dtype=float)
        return self.f.radial_values(s) * self.w.values(s)

    def radial_breaks(self):
        dyadic = tuple(2.0**j for j in range(0, 64))
        return tuple(sorted(set(self.f.radial_breaks()) | set(dyadic)))

    def singularities(self):
        sing = self.f.singularities()
        if any(not any(pt) for pt in sing.points):
            return sing
        # the weight changes on scale |y| around the origin
        return sing.merged(SingularitySet(((0.0,) * self.n,), (0.0,)))

    def seeds(self):
        return self.f.seeds()

    def support_radius(self):
        return self.f.support_radius()


@dataclass(frozen=True)
class WeightedNorm:
    """value = (bulk + tail)^(1/p); bulk and tail are p-th powers."""

    value: float
    bulk: float
    tail: float
    radius: float
    scheme: str

    def to_dict(self):
        return {"value": self.value, "bulk": self.bulk, "tail": self.tail, "radius": self.radius, "scheme": self.scheme}


def _tail_decay(f: Function):
    d = f.tail_decay()
    if d is None and math.isfinite(f.support_radius()):
        d = TailDecay(0.0, math.inf, f.support_radius(), True)
    if d is None:
        raise QuadratureFailure(f"no tail majorant known for {f.to_dict()['fn']}")
    return d


def weighted_norm_parts(f: Function, w: Weight, p: float, n: int, q: QuadratureConfig | None = None,
                        r_max: float = R_MAX) -> WeightedNorm:
    """Weighted L^p norm: quadrature over B(0, R) plus the analytic tail bound outside."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if f.n != n:
        from .errors import DimensionMismatch

        raise DimensionMismatch(f"function lives in R^{f.n}, norm requested in R^{n}")
    q = q or QuadratureConfig()
    d = _tail_decay(f)
    R = max(r_max, d.start, 2.0)
    if math.isfinite(d.exponent):
        m = w.majorant(p)
        c = m.power - d.exponent * p + n
        tail = _tail_integral(sphere_area(n) * d.const**p * m.const, c, m.log_power, R)
        if not math.isfinite(tail):
            kind = "diverges" if d.exact else "has an infinite majorant"
            raise Divergent(f"weighted tail integral {kind}: |f|^p w^p |y|^(n-1) ~ s^{c - 1:g} ln(s)^{-m.log_power:g}", c)
    else:
        tail = 0.0
    R = min(R, f.support_radius()) if f.support_radius() > 0 else R
    if f.support_radius() == 0.0:
        return WeightedNorm(0.0, 0.0, 0.0, 0.0, "exact")
    vals, _, used = ball_power_integrals(_WeightedPower(f, w, p), np.zeros((1, n)), R, p, q, [(0, 0)])
    bulk = float(vals[0])
    return WeightedNorm((bulk + tail) ** (1.0 / p), bulk, tail, R, used[0])


def weighted_norm(f: Function, w: Weight, p: float, n: int, q: QuadratureConfig | None = None) -> float:
    """(integral of |f|^p w^p)^(1/p); raises Divergent when the tail bound is infinite."""
    return weighted_norm_parts(f, w, p, n, q).value


def embedding_gamma(params: MorreyParams) -> float:
    return params.lam if params.homogeneous else float(params.n)


@dataclass
class EmbeddingReport:
    weight: dict
    params: dict
    gamma: float
    admissibility: dict
    entries: list = field(default_factory=list)

    @property
    def max_ratio(self):
        ratios = [e["ratio"] for e in self.entries if e.get("ratio") is not None]
        return max(ratios) if ratios else None

    def to_dict(self):
        return {
            "weight": self.weight,
            "params": self.params,
            "gamma": self.gamma,
            "admissibility": self.admissibility,
            "entries": self.entries,
            "max_ratio": self.max_ratio,
        }


def admissibility(w: Weight, p: float, gamma: float, grid=DEFAULT_GRID) -> dict:
    holds, ratio = almost_decreasing_check(w, p, gamma, grid)
    finite, value = integral_condition(w, p, gamma)
    lo, hi = w.near_origin_constants()
    return {
        "almost_decreasing": holds,
        "worst_ratio": ratio,
        "integral_finite": finite,
        "integral_value": value if finite else None,
        "near_origin": [lo, hi],
    }


def embedding_scan(catalog, w: Weight, params: MorreyParams, cfg: SearchConfig | None = None) -> EmbeddingReport:
    """ratio(f) = weighted norm / Morrey norm for every catalog entry; the
    largest ratio is the empirical embedding constant."""
    if not 0 < params.lam < params.n:
        raise ValueError("the embedding needs 0 < lambda < n")
    cfg = cfg or SearchConfig()
    gamma = embedding_gamma(params)
    adm = admissibility(w, params.p, gamma)
    if not (adm["almost_decreasing"] and adm["integral_finite"]):
        raise AdmissibilityError(
            f"weight {w.to_dict()} is not admissible for gamma={gamma:g}: "
            f"almost decreasing={adm['almost_decreasing']}, integral finite={adm['integral_finite']}"
        )
    report = EmbeddingReport(w.to_dict(), params.to_dict(), gamma, adm)
    for f in catalog:
        entry = {"function": f.to_dict()}
        try:
            norm, _ = morrey_norm(f, params, cfg)
            if norm == 0.0:
                raise SkippedEntry("Morrey norm is zero")
            wn = weighted_norm_parts(f, w, params.p, params.n, cfg.quadrature)
            entry.update(status="ok", morrey_norm=norm, weighted=wn.to_dict(), ratio=wn.value / norm)
        except SkippedEntry as exc:
            entry.update(status="skipped", reason=str(exc), ratio=None)
        except ComputeError as exc:
            entry.update(status="error", reason=f"{type(exc).__name__}: {exc}", ratio=None)
        report.entries.append(entry)
    return report
