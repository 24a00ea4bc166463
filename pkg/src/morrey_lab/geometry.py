"""Ball measures and ball/ball intersection volumes in dimensions 1 to 3."""
from __future__ import annotations

import math

import numpy as np


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n=1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n: int, r: float = 1.0) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r**n


def intersection_volume(d, r1, r2, n: int):
    """Lebesgue measure of B(a, r1) ∩ B(b, r2) with |a - b| = d.

    Vectorised over ``d``, ``r1`` and ``r2``; closed forms for n = 1, 2, 3.
    """
    d, r1, r2 = np.broadcast_arrays(
        np.asarray(d, dtype=float), np.asarray(r1, dtype=float), np.asarray(r2, dtype=float)
    )
    out = np.zeros(d.shape)
    rmin = np.minimum(r1, r2)
    inside = d <= np.abs(r1 - r2)
    out[inside] = ball_volume(n) * rmin[inside] ** n
    lens = (~inside) & (d < r1 + r2)
    if not np.any(lens):
        return out if out.ndim else float(out)
    dd, a, b = d[lens], r1[lens], r2[lens]
    if n == 1:
        val = a + b - dd
    elif n == 2:
        ca = np.clip((dd * dd + a * a - b * b) / (2 * dd * a), -1.0, 1.0)
        cb = np.clip((dd * dd + b * b - a * a) / (2 * dd * b), -1.0, 1.0)
        kite = (-dd + a + b) * (dd + a - b) * (dd - a + b) * (dd + a + b)
        val = a * a * np.arccos(ca) + b * b * np.arccos(cb) - 0.5 * np.sqrt(np.maximum(kite, 0.0))
    elif n == 3:
        val = (
            math.pi
            * (a + b - dd) ** 2
            * (dd * dd + 2 * dd * (a + b) - 3 * (a - b) ** 2)
            / (12 * dd)
        )
    else:
        raise ValueError(f"unsupported dimension {n}")
    out[lens] = np.clip(val, 0.0, ball_volume(n) * np.minimum(a, b) ** n)
    return out if out.ndim else float(out)


def integer_cover_count(n: int, radius: float) -> int:
    """Number of balls B(m, 1), m in Z^n, needed to cover any ball B(x, radius).

    Unit balls around integer points contain their Voronoi cubes for n <= 3,
    so it suffices to count cubes [m - 1/2, m + 1/2]^n that can meet the open
    cube of side 2*radius around x; per axis that is ceil(2*radius + 1).
    """
    if n > 3:
        raise ValueError("integer lattice unit balls cover R^n only for n <= 3")
    return int(math.ceil(2 * radius + 1)) ** n
