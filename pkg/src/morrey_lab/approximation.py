"""Mollifiers, convolution fields, translation moduli and approximation tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .catalog import Function, Gaussian, SingularitySet, SmoothBump, Sum, Tail, TailDecay, Translated, ball_truncate
from .core import MorreyParams, SearchConfig, morrey_norm
from .quadrature import BallGeometry, QuadratureConfig, integrate_balls
from .vanishing import HOLD_FRACTION, FAILS, HOLDS, decay_fit, vanishing_profiles

GAUSS_CUTOFF = 8.0  # Gaussian kernels are truncated at GAUSS_CUTOFF * sigma * t


@dataclass(frozen=True)
class KernelDescriptor:
    """phi_t(x) = t^-n phi(x / t) for a Gaussian or bump profile phi."""

    base: Function
    normalized: bool = True
    t: float = 1.0

    def __post_init__(self):
        if not isinstance(self.base, (Gaussian, SmoothBump)):
            raise ValueError("kernels are Gaussian or SmoothBump descriptors")
        if self.t <= 0:
            raise ValueError("dilation must be positive")

    @property
    def n(self):
        return self.base.n

    def _base_mass(self):
        return 1.0 if isinstance(self.base, Gaussian) else self.base.mass

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        v = self.base.values(pts / self.t) * self.t ** (-self.n)
        return v / self._base_mass() if self.normalized else v

    def l1_norm(self):
        return 1.0 if self.normalized else self._base_mass()

    def radius(self):
        """Radius of the ball the kernel is integrated over."""
        if isinstance(self.base, Gaussian):
            return GAUSS_CUTOFF * self.base.sigma * self.t
        return self.base.radius * self.t

    def mass_defect(self):
        """Kernel mass lost to the truncation radius."""
        if isinstance(self.base, Gaussian):
            return float(special.gammaincc(self.n / 2, GAUSS_CUTOFF**2 / 2)) * self.l1_norm()
        return 0.0

    def to_dict(self):
        return {"base": self.base.to_dict(), "normalized": self.normalized, "t": self.t}


def kernel_from_dict(d) -> KernelDescriptor:
    from .catalog import from_dict

    d = dict(d)
    base = from_dict(d.pop("base"))
    return KernelDescriptor(base, bool(d.pop("normalized", True)), float(d.pop("t", 1.0)))


def dilate(kernel: KernelDescriptor, t: float) -> KernelDescriptor:
    if t <= 0:
        raise ValueError("dilation must be positive")
    return replace(kernel, t=kernel.t * t)


@dataclass(frozen=True, eq=False)
class ConvolvedField(Function):
    """x -> (f * kernel)(x), computed by quadrature over B(x, kernel radius)."""

    f: Function
    kernel: KernelDescriptor
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    cheap = False

    def __post_init__(self):
        if self.f.n != self.kernel.n:
            raise ValueError("function and kernel dimensions differ")

    @property
    def n(self):
        return self.f.n

    @property
    def is_radial(self):
        return self.f.is_radial

    @property
    def abs_decreasing(self):
        # kernels are symmetric decreasing, so the convolution inherits the property
        return self.f.abs_decreasing

    def _geom(self):
        return BallGeometry.from_singularities(self.f.singularities(), self.n, 1.0)

    def values(self, pts):
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        x = pts.reshape(-1, self.n)
        if x.shape[0] == 0:
            return np.zeros(shape)
        a = self.kernel.radius()
        support = self.f.support_radius()
        out = np.zeros(x.shape[0])
        live = np.flatnonzero(np.linalg.norm(x, axis=1) < support + a)
        if live.size:
            xs = x[live]
            f, k = self.f, self.kernel

            def integrand(y, rows):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return f.values(y) * k.values(xs[rows][:, None, :] - y)

            q = self.quadrature if self.quadrature.scheme != "analytic-radial" else replace(self.quadrature, scheme="auto")
            vals, _ = integrate_balls(integrand, xs, a, self._geom(), q, keys=[(i, 0) for i in range(xs.shape[0])])
            out[live] = vals
        return out.reshape(shape)

    def radial_values(self, s):
        s = np.asarray(s, dtype=float)
        pts = np.zeros(s.shape + (self.n,))
        pts[..., 0] = s
        return self.values(pts)

    def radial_breaks(self):
        a = self.kernel.radius()
        sing = self.f.singularities()
        out = set()
        for c, rad in sing.spheres:
            if not any(c):
                out.update(b for b in (rad - a, rad + a) if b > 0)
        if any(not any(p) for p in sing.points):
            out.add(a)
        return tuple(sorted(out))

    def singularities(self):
        # smooth, but it changes on the kernel scale around f's features
        a = self.kernel.radius()
        sing = self.f.singularities()
        spheres = []
        for c, rad in sing.spheres:
            spheres.extend((c, b) for b in (rad - a, rad + a) if b > 0)
        return SingularitySet(tuple(sing.points), (0.0,) * len(sing.points), tuple(spheres))

    def seeds(self):
        return self.f.seeds()

    def support_radius(self):
        return self.f.support_radius() + self.kernel.radius()

    def ball_integral(self, center, r, p):
        return None

    def tail_decay(self):
        d = self.f.tail_decay()
        if d is None:
            return None
        a = self.kernel.radius()
        if not math.isfinite(d.exponent):
            return TailDecay(0.0, d.exponent, d.start + a, d.exact)
        # |y - z| >= |y|/2 once |y| >= 2a
        const = d.const * 2.0**d.exponent * self.kernel.l1_norm()
        return TailDecay(const, d.exponent, max(2 * a, d.start + a), False)

    def to_dict(self):
        return {"fn": "convolved", "inner": self.f.to_dict(), "kernel": self.kernel.to_dict()}


def convolve(f: Function, kernel: KernelDescriptor, t: float, x, q: QuadratureConfig | None = None) -> float:
    """(f * phi_t)(x)."""
    if t <= 0:
        raise ValueError("dilation must be positive")
    field_ = ConvolvedField(f, dilate(kernel, t), q or QuadratureConfig())
    x = np.asarray(x, dtype=float).reshape(1, f.n)
    return float(field_.values(x)[0])


def _with_quadrature(cfg):
    return cfg or SearchConfig()


def young_check(f: Function, g: KernelDescriptor, params: MorreyParams, cfg: SearchConfig | None = None):
    """(norm of f * g, ||g||_1 * norm of f)."""
    cfg = _with_quadrature(cfg)
    lhs, _ = morrey_norm(ConvolvedField(f, g, cfg.quadrature), params, cfg)
    base, _ = morrey_norm(f, params, cfg)
    return lhs, g.l1_norm() * base


def translation_difference(f: Function, xi) -> Function:
    return Sum((Translated(f, tuple(xi)), f), (1.0, -1.0))


def zorko_modulus(f: Function, xi, params: MorreyParams, cfg: SearchConfig | None = None) -> float:
    """Morrey norm of f(. - xi) - f."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if not np.any(xi):
        return 0.0
    est, _ = morrey_norm(translation_difference(f, xi), params, _with_quadrature(cfg))
    return est


@dataclass
class ConvergenceTable:
    """Rows (parameter, error); ``norm`` is the norm of the target function."""

    label: str
    rows: list
    norm: float
    fit: dict

    def errors(self):
        return np.array([e for _, e in self.rows])

    def to_dict(self):
        return {"parameter": self.label, "rows": [list(r) for r in self.rows], "norm": self.norm, "fit": self.fit}


def mollifier_convergence(f: Function, kernel: KernelDescriptor, t_schedule, params: MorreyParams,
                          cfg: SearchConfig | None = None) -> ConvergenceTable:
    """error(t) = norm of f * phi_t - f along a decreasing schedule of t."""
    t_schedule = [float(t) for t in t_schedule]
    if any(t <= 0 for t in t_schedule) or any(b >= a for a, b in zip(t_schedule, t_schedule[1:])):
        raise ValueError("t schedule must be positive and decreasing")
    cfg = _with_quadrature(cfg)
    norm, _ = morrey_norm(f, params, cfg)
    rows = []
    for t in t_schedule:
        smoothed = ConvolvedField(f, dilate(kernel, t), cfg.quadrature)
        err, _ = morrey_norm(Sum((smoothed, f), (1.0, -1.0)), params, cfg)
        rows.append((t, err))
    fit = decay_fit(t_schedule[::-1], [e for _, e in rows][::-1])
    return ConvergenceTable("t", rows, norm, fit)


def truncation_convergence(f: Function, k_schedule, params: MorreyParams,
                           cfg: SearchConfig | None = None) -> ConvergenceTable:
    """error(k) = norm of f - ball_truncate(f, k), i.e. of f outside B(0, k)."""
    k_schedule = [float(k) for k in k_schedule]
    if any(b <= a for a, b in zip(k_schedule, k_schedule[1:])):
        raise ValueError("k schedule must be increasing")
    cfg = _with_quadrature(cfg)
    norm, _ = morrey_norm(f, params, cfg)
    rows = []
    for k in k_schedule:
        if ball_truncate(f, k) is f:
            rows.append((k, 0.0))
            continue
        err, _ = morrey_norm(Tail(f, k), params, cfg)
        rows.append((k, err))
    fit = decay_fit(k_schedule, [e for _, e in rows])
    return ConvergenceTable("k", rows, norm, fit)


def converges(table: ConvergenceTable) -> bool:
    """Monotone decrease with a final error below HOLD_FRACTION of the norm."""
    e = table.errors()
    return bool(np.all(np.diff(e) <= 0) and e[-1] <= HOLD_FRACTION * table.norm)


def invariance_experiment(f: Function, kernel: KernelDescriptor, params: MorreyParams,
                          cfg: SearchConfig | None = None):
    """Vanishing reports of f and of f * kernel, plus the flags that got worse."""
    cfg = _with_quadrature(cfg)
    before = vanishing_profiles(f, params, cfg)
    after = vanishing_profiles(ConvolvedField(f, kernel, cfg.quadrature), params, cfg)
    return before, after


def downgrades(before, after):
    """Flags that were 'holds' before convolution and 'fails' after."""
    return [k for k, v in before.flags.items() if v == HOLDS and after.flags.get(k) == FAILS]
