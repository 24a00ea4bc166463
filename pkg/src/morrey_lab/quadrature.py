"""Integration of (possibly singular, piecewise smooth) integrands over balls.

Three schemes:

* ``analytic-radial``: closed-form or 1-D radial oracles supplied by catalog
  descriptors (exact up to floating point).
* ``product-rule``: polar coordinates about a *pole* (the strongest singular
  point inside the ball, else the centre of a discontinuity sphere inside
  it, else the ball centre).  Rays are split where they
  cross discontinuity spheres; the segment touching the pole is graded as
  ``t = rho * u**q`` with ``q = ceil(n - e)/(n - e)`` for a blow-up of order ``e``, which
  makes pure power singularities integrate exactly.  Other segments use
  nodes evenly spaced in log-distance to the nearest singular point, so
  steep tails and near-boundary blow-ups stay resolved.  Gauss-Legendre in
  each segment; in the plane, angular panels split at sphere tangents (plain
  trapezoid when there are no spheres); Gauss x trapezoid for n = 3.
* ``monte-carlo``: the same polar map with random directions and u stratified
  into equal shells, giving a finite-variance estimator for integrable power
  singularities.

``auto`` picks the analytic path when the descriptor has one, then, for
radial functions, a 1-D rule over spheres |y| = s weighted by the measure of
their intersection with the ball, and the product rule otherwise.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import QuadratureFailure
from .geometry import ball_volume, sphere_area

SCHEMES = ("auto", "analytic-radial", "product-rule", "monte-carlo")
DEFAULT_SEED = 0x4D4F52

# points per vectorised chunk; bounds peak memory of the product rule
_CHUNK_POINTS = 1_500_000
# blow-up points within this relative distance of the sphere get the near-boundary rule
_BOUNDARY_BAND = 0.05


@dataclass(frozen=True)
class QuadratureConfig:
    scheme: str = "auto"
    radial_nodes: int = 24
    angular_nodes: int = 48
    mc_samples: int = 200_000
    mc_shells: int = 16
    seed: int = DEFAULT_SEED
    rtol: float = 1e-4
    fail_rtol: float = 5e-2
    check_error: bool = True
    max_refine: int = 2
    batch_rtol: float = 1e-6

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}")
        if min(self.radial_nodes, self.angular_nodes, self.mc_samples, self.mc_shells) < 1:
            raise ValueError("node and sample counts must be positive")

    def coarse(self):
        return replace(self, radial_nodes=max(self.radial_nodes // 2, 2),
                       angular_nodes=max(self.angular_nodes // 2, 4))


@dataclass(frozen=True)
class BallGeometry:
    """Singular points and discontinuity spheres an integrand may have."""

    points: np.ndarray
    exponents: np.ndarray
    sphere_centers: np.ndarray
    sphere_radii: np.ndarray

    @classmethod
    def from_singularities(cls, sing, n, p=1.0):
        pts = np.asarray(sing.points, dtype=float).reshape(-1, n)
        exps = np.asarray(sing.exponents, dtype=float).reshape(-1) * p
        sc = np.asarray([c for c, _ in sing.spheres], dtype=float).reshape(-1, n)
        sr = np.asarray([r for _, r in sing.spheres], dtype=float).reshape(-1)
        return cls(pts, exps, sc, sr)

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((0, n)), np.zeros(0), np.zeros((0, n)), np.zeros(0))


@functools.lru_cache(maxsize=64)
def _gauss_legendre(m):
    x, w = np.polynomial.legendre.leggauss(m)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _leggauss(m):
    return _gauss_legendre(int(m))


def directions(n, m):
    """Quadrature directions on the unit sphere and their weights."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        th = 2 * np.pi * (np.arange(m) + 0.5) / m
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2 * np.pi / m)
    if n == 3:
        mu, wmu = _leggauss(max(m // 2, 2))
        ph = 2 * np.pi * (np.arange(m) + 0.5) / m
        s = np.sqrt(1 - mu**2)
        d = np.stack(
            [np.outer(s, np.cos(ph)).ravel(), np.outer(s, np.sin(ph)).ravel(), np.repeat(mu, m)], axis=1
        )
        return d, np.repeat(wmu, m) * (2 * np.pi / m)
    raise ValueError(f"unsupported dimension {n}")


def _singular_in_closed_ball(points, exponents, centers, radii):
    """(dist, mask): listed points inside each ball, plus blow-up points just outside it."""
    dist = np.linalg.norm(points[None, :, :] - centers[:, None, :], axis=2)
    r = radii[:, None]
    inside = dist < r * (1 - 1e-12)
    near = (dist <= r * (1 + _BOUNDARY_BAND)) & (exponents[None, :] > 0)
    return dist, inside | near


def _choose_poles(centers, radii, geom):
    """Per ball: the highest-order singular point inside (or just outside),
    else the centre of the largest discontinuity sphere centred inside, else
    the ball centre.  Returns (poles, exponents, at_point, near_boundary)."""
    m = centers.shape[0]
    poles = centers.copy()
    exps = np.zeros(m)
    has = np.zeros(m, dtype=bool)
    on_boundary = np.zeros(m, dtype=bool)
    if geom.points.shape[0]:
        dist, inside = _singular_in_closed_ball(geom.points, geom.exponents, centers, radii)
        score = np.where(inside, geom.exponents[None, :] * 1e6 - dist / np.maximum(radii[:, None], 1e-300), -np.inf)
        best = np.argmax(score, axis=1)
        has = np.isfinite(score[np.arange(m), best])
        poles[has] = geom.points[best[has]]
        exps[has] = geom.exponents[best[has]]
        pick = dist[np.arange(m), best]
        on_boundary = has & (pick >= radii * (1 - _BOUNDARY_BAND))
    at_point = has.copy()
    if geom.sphere_radii.size and not np.all(has):
        dist = np.linalg.norm(geom.sphere_centers[None, :, :] - centers[:, None, :], axis=2)
        inside = dist < radii[:, None] * (1 - 1e-12)
        score = np.where(inside, geom.sphere_radii[None, :] - 1e-9 * dist, -np.inf)
        best = np.argmax(score, axis=1)
        use = ~has & np.isfinite(score[np.arange(m), best])
        poles[use] = geom.sphere_centers[best[use]]
    return poles, exps, at_point, on_boundary


def _scale_points(centers, geom, poles, exps, at_point):
    """Per ball: the listed point that sets the integrand's length scale.

    The pole itself when it is singular, else the nearest listed point
    outside the ball; none when the pole is a point of order zero.  Returns
    (points, mask of balls that have one).
    """
    m, n = centers.shape
    if geom.points.shape[0] == 0:
        return poles, np.zeros(m, dtype=bool)
    dist = np.linalg.norm(geom.points[None, :, :] - centers[:, None, :], axis=2)
    near = geom.points[np.argmin(dist, axis=1)]
    return np.where((exps > 0)[:, None], poles, near), (exps > 0) | ~at_point


def _grading(n, exps):
    """Exponent q of the map t = rho * u**q: |t|^(n-1-e) dt becomes u^(m-1) du
    with m = ceil(n - e), a polynomial, while keeping q >= 1."""
    gap = np.maximum(n - np.asarray(exps, dtype=float), 1e-3)
    return np.where(np.asarray(exps) > 0, np.ceil(gap - 1e-12) / gap, 1.0)


def _ray_segments(poles, centers, radii, dirs):
    """(start, end) distances from each pole along ``dirs`` (m, D, n) of the
    chord through its ball; empty chords have start = end = 0."""
    d = poles - centers  # (m, n)
    b = np.einsum("mn,mdn->md", d, dirs)
    c = np.sum(d * d, axis=1) - radii**2  # (m,)
    disc = b * b - c[:, None]
    root = np.sqrt(np.maximum(disc, 0.0))
    hit = disc >= 0
    end = np.where(hit, np.maximum(-b + root, 0.0), 0.0)
    start = np.where(hit & (c[:, None] > 0), np.clip(-b - root, 0.0, end), 0.0)
    return start, end


def _ray_lengths(poles, centers, radii, dirs):
    """Distance from each pole inside its ball to the boundary along ``dirs``."""
    return _ray_segments(poles, centers, radii, dirs)[1]


def _frame(axis):
    """Orthonormal (u, v) completing unit vectors ``axis`` (m, 3)."""
    helper = np.where(np.abs(axis[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return u, np.cross(axis, u)


def _near_boundary_rule(n, angular_nodes, poles, centers, radii, sc, sr):
    """Directions for a pole close to the ball boundary.

    Seen from the pole the ball fills a cone of half-angle h around the axis
    toward the centre (h = pi/2 on or inside the sphere).  Chord lengths
    change abruptly at the cone's edge and, from inside, across the plane
    orthogonal to the axis, so the rule puts panel edges there.
    """
    m = poles.shape[0]
    rel = centers - poles
    D = np.linalg.norm(rel, axis=1)
    axis = rel / D[:, None]
    outside = D >= radii
    h = np.where(outside, np.arcsin(np.clip(radii / D, 0.0, 1.0)), 0.5 * np.pi)
    if n == 1:
        both = np.stack([axis, -axis], axis=1)
        return both, np.stack([np.ones(m), np.where(outside, 0.0, 1.0)], axis=1)
    if n == 2:
        psi = np.arctan2(axis[:, 1], axis[:, 0])
        cuts = np.mod(np.stack([psi - h, psi + h], axis=1), 2 * np.pi)
        return _angular_rule(2, angular_nodes, poles, sc, sr, centers, radii, extra_cuts=cuts)
    k = max(angular_nodes // 2, 2)
    v, wv = _leggauss(k)
    v, wv = 0.5 * (v + 1), 0.5 * wv
    ph = 2 * np.pi * (np.arange(angular_nodes) + 0.5) / angular_nodes
    lo = np.cos(h)[:, None]
    # mu = lo + (1 - lo) v^2 absorbs the square-root chord behaviour at the cone edge
    mu_cone = lo + (1 - lo) * v**2
    w_cone = (1 - lo) * 2 * v * wv
    # from inside: two panels in mu split at the orthogonal plane
    mu_in = np.concatenate([-v[::-1], v])
    w_in = np.concatenate([wv[::-1], wv])
    mu_in = np.broadcast_to(mu_in, (m, 2 * k))
    w_in = np.broadcast_to(w_in, (m, 2 * k))
    mu = np.where(outside[:, None], np.concatenate([mu_cone, mu_cone], axis=1), mu_in)
    wmu = np.where(outside[:, None], np.concatenate([w_cone, np.zeros_like(w_cone)], axis=1), w_in)
    s = np.sqrt(np.maximum(1 - mu**2, 0.0))
    u, vv = _frame(axis)
    cph, sph = np.cos(ph), np.sin(ph)
    dirs = (mu[:, :, None, None] * axis[:, None, None, :]
            + (s[:, :, None] * cph[None, None, :])[..., None] * u[:, None, None, :]
            + (s[:, :, None] * sph[None, None, :])[..., None] * vv[:, None, None, :])
    w = wmu[:, :, None] * np.full(ph.size, 2 * np.pi / ph.size)[None, None, :]
    return dirs.reshape(m, -1, 3), w.reshape(m, -1)


def _relevant_spheres(centers, radii, sc, sr):
    """Spheres whose surface meets at least one of the balls."""
    if sr.size == 0:
        return sc, sr
    dist = np.linalg.norm(sc[None, :, :] - centers[:, None, :], axis=2)
    crosses = np.abs(dist - sr[None, :]) < radii[:, None]
    keep = np.any(crosses, axis=0)
    return sc[keep], sr[keep]


def _angular_rule(n, angular_nodes, poles, sc, sr, centers=None, radii=None, extra_cuts=None):
    """Per-ball directions (m, D, n) and weights (m, D).

    In the plane the circle of directions is cut at the tangent angles of
    every discontinuity sphere seen from the pole, and each panel gets
    Gauss nodes under the map v -> (1 - cos(pi v))/2, which absorbs the
    square-root behaviour of chord lengths at tangency.
    """
    m = poles.shape[0]
    if n != 2 or (sr.size == 0 and extra_cuts is None):
        dirs, dw = directions(n, angular_nodes)
        return np.broadcast_to(dirs, (m,) + dirs.shape), np.broadcast_to(dw, (m, dw.size))
    vec = sc[None, :, :] - poles[:, None, :]
    dist = np.linalg.norm(vec, axis=2)
    psi = np.arctan2(vec[..., 1], vec[..., 0])
    outside = dist > sr[None, :]
    half = np.arcsin(np.clip(sr[None, :] / np.maximum(dist, 1e-300), 0.0, 1.0))
    two_pi = 2 * np.pi
    cuts = np.concatenate([np.mod(psi - half, two_pi), np.mod(psi + half, two_pi)], axis=1)
    cuts = np.where(np.concatenate([outside, outside], axis=1), cuts, two_pi)
    if extra_cuts is not None:
        cuts = np.concatenate([cuts, extra_cuts], axis=1)
    if centers is not None and sr.size:
        # directions of the points where the ball boundary meets each sphere
        u = sc[None, :, :] - centers[:, None, :]
        d = np.linalg.norm(u, axis=2)
        r = radii[:, None]
        meets = (d > np.abs(r - sr[None, :])) & (d < r + sr[None, :]) & (d > 0)
        dd = np.where(meets, d, 1.0)
        along = (r**2 - sr[None, :] ** 2 + dd**2) / (2 * dd)
        h = np.sqrt(np.maximum(r**2 - along**2, 0.0))
        e = u / dd[..., None]
        perp = np.stack([-e[..., 1], e[..., 0]], axis=2)
        base = centers[:, None, :] + along[..., None] * e
        extra = []
        for sign in (1.0, -1.0):
            pt = base + sign * h[..., None] * perp - poles[:, None, :]
            ang = np.mod(np.arctan2(pt[..., 1], pt[..., 0]), two_pi)
            extra.append(np.where(meets, ang, two_pi))
        cuts = np.concatenate([cuts] + extra, axis=1)
    cuts = np.sort(np.concatenate([np.zeros((m, 1)), cuts, np.full((m, 1), two_pi)], axis=1), axis=1)
    a, width = cuts[:, :-1], np.diff(cuts, axis=1)
    per_panel = max(6, angular_nodes // 4)
    v, wv = _leggauss(per_panel)
    v = 0.5 * (v + 1)
    wv = 0.5 * wv
    s = 0.5 * (1 - np.cos(np.pi * v))
    ds = 0.5 * np.pi * np.sin(np.pi * v) * wv
    theta = (a[..., None] + width[..., None] * s).reshape(m, -1)
    weights = (width[..., None] * ds).reshape(m, -1)
    return np.stack([np.cos(theta), np.sin(theta)], axis=2), weights


def _product_rule_chunk(integrand, rows, centers, radii, geom, radial_nodes, angular_nodes, boundary=False):
    n = centers.shape[1]
    poles, exps, at_point, _ = _choose_poles(centers, radii, geom)
    q = _grading(n, exps)
    sc, sr = _relevant_spheres(centers, radii, geom.sphere_centers, geom.sphere_radii)
    if boundary:
        dirs, dw = _near_boundary_rule(n, angular_nodes, poles, centers, radii, sc, sr)
    else:
        dirs, dw = _angular_rule(n, angular_nodes, poles, sc, sr, centers, radii)
    rho0, rho = _ray_segments(poles, centers, radii, dirs)  # (m, D) each
    if sr.size:
        dk = poles[:, None, :] - sc[None, :, :]  # (m, S, n)
        b = np.einsum("msn,mdn->mds", dk, dirs)
        cq = np.sum(dk * dk, axis=2) - sr[None, :] ** 2  # (m, S)
        disc = b * b - cq[:, None, :]
        root = np.sqrt(np.maximum(disc, 0.0))
        cand = np.concatenate([-b - root, -b + root], axis=2)
        ok = (np.concatenate([disc, disc], axis=2) > 0) & (cand > rho0[..., None]) & (cand < rho[..., None])
        cand = np.where(ok, cand, rho[..., None])
        bp = np.sort(np.concatenate([rho0[..., None], cand, rho[..., None]], axis=2), axis=2)
    else:
        bp = np.stack([rho0, rho], axis=2)
    # log-spaced nodes in the distance to a nearby singular point
    scale, use_log = _scale_points(centers, geom, poles, exps, at_point)
    rel = scale - poles
    tstar = np.einsum("mn,mdn->md", rel, dirs)
    h = np.sqrt(np.maximum(np.sum(rel * rel, axis=1)[:, None] - tstar**2, 0.0))
    h0 = np.maximum(h, 1e-9 * radii[:, None])
    split = np.where((exps > 0)[:, None] | ~use_log[:, None], rho, np.clip(tstar, rho0, rho))
    # the graded piece at a singular pole ends where the next listed point sets a new scale
    if geom.points.shape[0] > 1:
        gap = np.linalg.norm(geom.points[None, :, :] - poles[:, None, :], axis=2)
        gap = np.min(np.where(gap > 1e-12 * radii[:, None], gap, np.inf), axis=1)
        gap = np.where(exps > 0, gap, np.inf)
        inner = np.clip(np.minimum(gap[:, None], rho), rho0, rho)
        bp = np.concatenate([bp, inner[..., None]], axis=2)
    bp = np.sort(np.concatenate([bp, split[..., None]], axis=2), axis=2)
    a, bnd = bp[..., :-1], bp[..., 1:]  # (m, D, Sg)
    x, w = _leggauss(radial_nodes)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    length = bnd - a
    t = a[..., None] + length[..., None] * x  # (m, D, Sg, G)
    wt = length[..., None] * w
    if np.any(use_log):
        ts, hh = tstar[..., None], h0[..., None]
        side = np.where(0.5 * (a + bnd) >= ts, 1.0, -1.0)
        da, db = np.abs(a - ts), np.abs(bnd - ts)
        va = np.log(np.minimum(da, db) + hh)
        vb = np.log(np.maximum(da, db) + hh)
        v = va[..., None] + (vb - va)[..., None] * x
        ev = np.exp(v)
        tl = ts[..., None] + side[..., None] * (ev - hh[..., None])
        wl = (vb - va)[..., None] * w * ev
        mask = use_log[:, None, None, None]
        t = np.where(mask, tl, t)
        wt = np.where(mask, wl, wt)
    # the segment starting at the pole is graded toward it
    qq = q[:, None, None]
    first_len = length[..., 0]
    graded = (exps > 0)[:, None, None] & (rho0 == 0.0)[..., None]
    t[..., 0, :] = np.where(graded, first_len[..., None] * x**qq, t[..., 0, :])
    wt[..., 0, :] = np.where(graded, first_len[..., None] * qq * x ** (qq - 1) * w, wt[..., 0, :])
    wt = wt * t ** (n - 1) * dw[:, :, None, None]
    pts = poles[:, None, None, None, :] + t[..., None] * dirs[:, :, None, None, :]
    m = centers.shape[0]
    vals = integrand(pts.reshape(m, -1, n), rows).reshape(wt.shape)
    vals = np.where(wt != 0, vals, 0.0)
    return np.sum(vals * wt, axis=(1, 2, 3))


def product_rule(integrand, centers, radii, geom, radial_nodes=24, angular_nodes=48, rows=None):
    """Integrate ``integrand`` over each ball B(centers[i], radii[i]).

    ``integrand(pts, rows)`` receives points of shape ``(m, P, n)`` and the
    indices of the balls in the current chunk; it returns ``(m, P)`` values.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m, n = centers.shape
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (m,)).copy()
    rows = np.arange(m) if rows is None else np.asarray(rows)
    sc, sr = _relevant_spheres(centers, radii, geom.sphere_centers, geom.sphere_radii)
    geom = BallGeometry(geom.points, geom.exponents, sc, sr)
    segs = 2 * sr.size + 2
    if n == 2 and sr.size:
        ndir = (4 * sr.size + 1) * max(6, angular_nodes // 4)
    else:
        ndir = directions(n, angular_nodes)[0].shape[0]
    if n == 2:
        ndir += 2 * max(6, angular_nodes // 4)
    per_ball = ndir * segs * radial_nodes
    step = max(1, _CHUNK_POINTS // per_ball)
    out = np.empty(m)
    boundary = _choose_poles(centers, radii, geom)[3]
    for flag in (False, True):
        idx = np.flatnonzero(boundary == flag)
        for lo in range(0, idx.size, step):
            sl = idx[lo:lo + step]
            out[sl] = _product_rule_chunk(integrand, rows[sl], centers[sl], radii[sl], geom,
                                          radial_nodes, angular_nodes, boundary=flag)
    return out


def _partition_weight(pts, sing, j, power=4):
    """Smooth partition of unity: ~1 near sing[j], vanishing like
    |y - sing[k]|^power at the other singular points."""
    dj = np.linalg.norm(pts - sing[j], axis=-1)
    total = np.ones(dj.shape)
    for k in range(sing.shape[0]):
        if k != j:
            dk = np.linalg.norm(pts - sing[k], axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                total = total + np.where(dk > 0, (dj / np.where(dk > 0, dk, 1.0)) ** power, np.inf)
    return 1.0 / total


def split_product_rule(integrand, centers, radii, geom, radial_nodes=24, angular_nodes=48, rows=None):
    """Product rule that also copes with several singular points in one ball.

    Such balls are integrated once per interior singular point, each time
    with that point as the pole and the integrand multiplied by a partition
    of unity that hides the other singularities.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m, n = centers.shape
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (m,)).copy()
    rows = np.arange(m) if rows is None else np.asarray(rows)
    if geom.points.shape[0] < 2:
        return product_rule(integrand, centers, radii, geom, radial_nodes, angular_nodes, rows)
    _, inside = _singular_in_closed_ball(geom.points, geom.exponents, centers, radii)
    inside &= geom.exponents[None, :] > 0
    multi = inside.sum(axis=1) >= 2
    out = np.empty(m)
    if np.any(~multi):
        out[~multi] = product_rule(integrand, centers[~multi], radii[~multi], geom,
                                   radial_nodes, angular_nodes, rows[~multi])
    for i in np.flatnonzero(multi):
        idx = np.flatnonzero(inside[i])
        sing = geom.points[idx]
        total = 0.0
        for j in range(idx.size):
            # the hidden points stay listed with order 0 so they still set length scales
            order = np.r_[j, np.delete(np.arange(idx.size), j)]
            exps = np.zeros(idx.size)
            exps[0] = geom.exponents[idx[j]]
            sub = BallGeometry(sing[order], exps, geom.sphere_centers, geom.sphere_radii)

            def part(pts, rr, j=j):
                w = _partition_weight(pts, sing, j)
                with np.errstate(invalid="ignore"):
                    # w vanishes exactly at the other singular points
                    return np.where(w > 0, integrand(pts, rr) * w, 0.0)

            total += product_rule(part, centers[i:i + 1], radii[i:i + 1], sub, radial_nodes, angular_nodes,
                                  rows[i:i + 1])[0]
        out[i] = total
    return out


def monte_carlo(integrand, centers, radii, geom, samples, shells, seeds, rows=None):
    """Stratified polar Monte Carlo; returns (estimates, standard errors)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m, n = centers.shape
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (m,)).copy()
    rows = np.arange(m) if rows is None else np.asarray(rows)
    poles, exps, _, near = _choose_poles(centers, radii, geom)
    # sampling needs a pole inside the ball
    poles[near], exps[near] = centers[near], 0.0
    q = _grading(n, exps)
    per_shell = max(samples // shells, 2)
    area = sphere_area(n)
    est = np.empty(m)
    err = np.empty(m)
    for i in range(m):
        rng = np.random.default_rng(seeds[i])
        if n == 1:
            dirs = rng.choice([-1.0, 1.0], size=(shells * per_shell, 1))
        else:
            g = rng.standard_normal((shells * per_shell, n))
            dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        u = (np.repeat(np.arange(shells), per_shell) + rng.random(shells * per_shell)) / shells
        rho = _ray_lengths(poles[i:i + 1], centers[i:i + 1], radii[i:i + 1], dirs[None])[0]
        t = rho * u ** q[i]
        jac = area * rho * q[i] * u ** (q[i] - 1) * t ** (n - 1)
        pts = poles[i] + t[:, None] * dirs
        vals = integrand(pts[None], rows[i:i + 1])[0] * jac
        vals = vals.reshape(shells, per_shell)
        means = vals.mean(axis=1)
        var = vals.var(axis=1, ddof=1)
        est[i] = means.sum() / shells
        err[i] = math.sqrt(np.sum(var / per_shell)) / shells
    return est, err


def task_seed(seed, center_index, k):
    """Independent stream per (seed, centre index, dyadic exponent)."""
    return np.random.SeedSequence([int(seed) & (2**64 - 1), int(center_index), int(k) + 2**20])


def integrate_balls(integrand, centers, radii, geom, q: QuadratureConfig, keys=None, rows=None):
    """Numerical integral over balls with the configured numerical scheme.

    Returns (values, error_estimates).  Raises QuadratureFailure when the
    product rule's fine/coarse discrepancy still exceeds ``fail_rtol`` after
    ``max_refine`` node doublings, or when a value is not finite.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m, n = centers.shape
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (m,)).copy()
    if q.scheme == "monte-carlo":
        keys = keys if keys is not None else [(i, 0) for i in range(m)]
        seeds = [task_seed(q.seed, ci, k) for ci, k in keys]
        vals, errs = monte_carlo(integrand, centers, radii, geom, q.mc_samples, q.mc_shells, seeds, rows)
    else:
        rows = np.arange(m) if rows is None else np.asarray(rows)
        vals = np.empty(m)
        errs = np.zeros(m)
        scale = np.array([ball_volume(n, r) for r in radii])
        todo = np.arange(m)
        level = q
        for attempt in range(q.max_refine + 1):
            sub = (integrand, centers[todo], radii[todo], geom)
            vals[todo] = split_product_rule(*sub, level.radial_nodes, level.angular_nodes, rows[todo])
            if not q.check_error:
                break
            c = level.coarse()
            errs[todo] = np.abs(vals[todo] - split_product_rule(*sub, c.radial_nodes, c.angular_nodes, rows[todo]))
            # values far below the batch maximum cannot move a supremum
            floor = q.batch_rtol * np.max(np.abs(vals)) + 1e-12 * scale[todo]
            bad = errs[todo] > q.fail_rtol * np.abs(vals[todo]) + floor
            todo = todo[bad]
            if todo.size == 0:
                break
            # refine only the balls that missed the tolerance
            level = replace(level, radial_nodes=2 * level.radial_nodes, angular_nodes=2 * level.angular_nodes)
        else:
            i = int(todo[0])
            raise QuadratureFailure(
                f"product rule error {errs[i]:.3g} exceeds tolerance for ball "
                f"B({centers[i].tolist()}, {radii[i]:.6g}) (value {vals[i]:.6g})"
            )
    if not np.all(np.isfinite(vals)):
        raise QuadratureFailure("non-finite ball integral (integrand not integrable?)")
    return vals, errs


def _shell_measure(n, s, d, r):
    """Surface measure of the sphere |y| = s inside B(c, r), |c| = d > 0."""
    if n == 1:
        return (np.abs(s - d) < r).astype(float) + (s + d < r).astype(float)
    # u = (1 - cos(theta)) / 2 for the half-angle theta of the cap, written
    # without the cancellation of the law of cosines when r << d
    u = np.clip((r * r - (s - d) ** 2) / (4 * s * d), 0.0, 1.0)
    if n == 2:
        return 4 * s * np.arcsin(np.sqrt(u))
    return 4 * np.pi * s * s * u


def _radial_shell_rule(f, d, r, p, nodes):
    """Integral of |f|^p over B(c, r) for radial f by 1-D quadrature in |y|.

    ``d`` holds the centre distances (all > 0).  The segment from the origin
    is graded toward it; every other segment uses nodes spaced evenly in
    log |y|, composed in the plane with a cosine map that absorbs the
    square-root behaviour of arc lengths where the shells touch the ball.
    """
    n = f.n
    sing = f.singularities()
    e0 = max([e for pt, e in zip(sing.points, sing.exponents) if not any(pt)], default=0.0) * p
    lo = np.maximum(d - r, 0.0)
    hi = d + r
    breaks = np.asarray(f.radial_breaks(), dtype=float)
    cand = np.concatenate([lo[:, None], np.abs(r - d)[:, None], np.broadcast_to(breaks, (d.size, breaks.size)),
                           hi[:, None]], axis=1)
    bp = np.sort(np.clip(cand, lo[:, None], hi[:, None]), axis=1)
    a, b = bp[:, :-1], bp[:, 1:]
    x, w = _leggauss(nodes)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    if n == 2:
        wx = 0.5 * np.pi * np.sin(np.pi * x) * w
        x = 0.5 * (1 - np.cos(np.pi * x))
    else:
        wx = w
    origin = a == 0.0
    wide = b > 2 * a  # log spacing only pays off across a range of scales
    with np.errstate(divide="ignore", invalid="ignore"):
        la, lb = np.log(np.where(origin, 1.0, a)), np.log(np.where(origin, 1.0, b))
        v = la[..., None] + (lb - la)[..., None] * x
        s_log = np.where(wide[..., None], np.exp(v), a[..., None] + (b - a)[..., None] * x)
        w_log = np.where(wide[..., None], (lb - la)[..., None] * wx * s_log, (b - a)[..., None] * wx)
        q = float(_grading(n, e0))
        s_org = b[..., None] * x**q
        w_org = b[..., None] * q * x ** (q - 1) * wx
    sv = np.where(origin[..., None], s_org, s_log)
    ww = np.where(origin[..., None], w_org, w_log)
    ww = np.where((b > a)[..., None], ww, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        g = np.abs(f.radial_values(sv)) ** p
        meas = _shell_measure(n, sv, d[:, None, None], r)
        terms = np.where(ww != 0, g * meas * ww, 0.0)
    return np.sum(terms, axis=(1, 2))


def radial_shell_integrals(f, d, r, p, q: QuadratureConfig):
    """Ball integrals of |f|^p for radial f at centre distances ``d``; (values, errors)."""
    d = np.asarray(d, dtype=float)
    vals = np.empty(d.size)
    errs = np.zeros(d.size)
    todo = np.arange(d.size)
    nodes = 2 * q.radial_nodes
    for _ in range(q.max_refine + 1):
        vals[todo] = _radial_shell_rule(f, d[todo], r, p, nodes)
        if not q.check_error:
            break
        errs[todo] = np.abs(vals[todo] - _radial_shell_rule(f, d[todo], r, p, nodes // 2))
        floor = q.batch_rtol * np.max(np.abs(vals)) + 1e-12 * ball_volume(f.n, r)
        todo = todo[errs[todo] > q.fail_rtol * np.abs(vals[todo]) + floor]
        if todo.size == 0:
            break
        nodes *= 2
    else:
        i = int(todo[0])
        raise QuadratureFailure(
            f"radial shell rule error {errs[i]:.3g} exceeds tolerance at centre distance {d[i]:.6g}, radius {r:.6g}"
        )
    if not np.all(np.isfinite(vals)):
        raise QuadratureFailure("non-finite ball integral (integrand not integrable?)")
    return vals, errs


def ball_power_integrals(f, centers, r, p, q: QuadratureConfig, keys=None):
    """Integrals of |f|^p over balls B(c, r) for each centre c.

    Returns (values, errors, scheme_used_per_ball).
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    m = centers.shape[0]
    vals = np.full(m, np.nan)
    errs = np.zeros(m)
    used = np.array(["product-rule"] * m, dtype=object)
    if q.scheme in ("auto", "analytic-radial"):
        for i, c in enumerate(centers):
            v = f.ball_integral(c, r, p)
            if v is not None:
                vals[i] = v
                used[i] = "analytic-radial"
        if q.scheme == "analytic-radial" and np.any(np.isnan(vals)):
            raise ValueError("analytic-radial scheme selected but no exact oracle exists for some centres")
    todo = np.isnan(vals)
    if np.any(todo):
        idx = np.flatnonzero(todo)
        geom = BallGeometry.from_singularities(f.singularities(), f.n, p)
        support = f.support_radius()
        live = np.linalg.norm(centers[idx], axis=1) < support + r
        vals[idx[~live]] = 0.0
        idx = idx[live]
        if idx.size and q.scheme == "auto" and f.is_radial:
            v, e = radial_shell_integrals(f, np.linalg.norm(centers[idx], axis=1), r, p, q)
            vals[idx] = v
            errs[idx] = e
            used[idx] = "radial-shell"
        elif idx.size:
            def integrand(pts, rows):
                with np.errstate(divide="ignore", invalid="ignore"):
                    return np.abs(f.values(pts)) ** p

            sub_keys = None if keys is None else [keys[i] for i in idx]
            v, e = integrate_balls(integrand, centers[idx], r, geom, q, sub_keys)
            vals[idx] = v
            errs[idx] = e
            if q.scheme == "monte-carlo":
                used[idx] = "monte-carlo"
    return vals, errs, used
