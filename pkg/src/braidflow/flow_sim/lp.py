"""L^p length of piecewise-autonomous isotopies.

Each segment is autonomous, so its time integral is the duration times the
spatial L^p norm of its field.  Spatial integrals use product Gauss rules:
radial x angular on the disc, the two stereographic charts glued by a
smooth partition of unity on the sphere, and Duffy-mapped tensor rules on
the eight triangles of the octagon.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .dynamics import Isotopy, vector_field
from .surfaces import OCT_VERTICES, SurfaceModel

# chart 0 carries the weight on z > SPLIT, chart 1 on z < -SPLIT, blended between
SPLIT = 0.6


def _gauss(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _smoothstep(t: np.ndarray) -> np.ndarray:
    # C^3 step from 0 (t <= 0) to 1 (t >= 1)
    t = np.clip(t, 0.0, 1.0)
    return t**4 * (35 - 84 * t + 70 * t**2 - 20 * t**3)


def sphere_partition(z: np.ndarray) -> np.ndarray:
    """Weight of chart 0 at height ``z``; chart 1 gets one minus this."""
    return _smoothstep((z + SPLIT) / (2 * SPLIT))


@lru_cache(maxsize=16)
def _rule(kind: str, n: int):
    """Nodes (chart coordinates), chart tags, weights and metric factors."""
    ang = 2 * math.pi * np.arange(2 * n) / (2 * n)
    wang = np.full(2 * n, 2 * math.pi / (2 * n))
    if kind == "disc":
        r, wr = _gauss(n, 0.0, 1.0)
        rr, aa = np.meshgrid(r, ang, indexing="ij")
        pts = np.stack([rr * np.cos(aa), rr * np.sin(aa)], -1).reshape(-1, 2)
        w = np.outer(wr * r, wang).ravel()
        return pts, np.zeros(len(pts), np.int8), w, np.ones(len(pts))
    if kind == "sphere":
        # chart radius where z = -SPLIT, and the radius where the blend starts
        rho_out = math.sqrt((1 + SPLIT) / (1 - SPLIT))
        rho_in = math.sqrt((1 - SPLIT) / (1 + SPLIT))
        r1, w1 = _gauss(n, 0.0, rho_in)
        r2, w2 = _gauss(n, rho_in, rho_out)
        r, wr = np.concatenate([r1, r2]), np.concatenate([w1, w2])
        rr, aa = np.meshgrid(r, ang, indexing="ij")
        u = np.stack([rr * np.cos(aa), rr * np.sin(aa)], -1).reshape(-1, 2)
        rho2 = np.einsum("ij,ij->i", u, u)
        dens = 4.0 / (1.0 + rho2) ** 2
        z = (1.0 - rho2) / (1.0 + rho2)
        base = np.outer(wr * r, wang).ravel() * dens
        w0 = base * sphere_partition(z)
        # chart 1 is the mirror image, and its own height is -z
        w1_ = base * (1.0 - sphere_partition(-z))
        pts = np.concatenate([u, u])
        charts = np.concatenate([np.zeros(len(u), np.int8), np.ones(len(u), np.int8)])
        metric = np.sqrt(np.concatenate([dens, dens]))
        return pts, charts, np.concatenate([w0, w1_]), metric
    if kind == "polygon_genus2":
        s, ws = _gauss(n, 0.0, 1.0)
        t, wt = _gauss(n, 0.0, 1.0)
        ss, tt = np.meshgrid(s, t, indexing="ij")
        pts, w = [], []
        for j in range(8):
            a, b = OCT_VERTICES[j], OCT_VERTICES[(j + 1) % 8]
            jac = abs(a[0] * (b - a)[1] - a[1] * (b - a)[0])
            p = ss[..., None] * (a + tt[..., None] * (b - a))
            pts.append(p.reshape(-1, 2))
            w.append((np.outer(ws, wt) * ss * jac).ravel())
        pts = np.concatenate(pts)
        return pts, np.zeros(len(pts), np.int8), np.concatenate(w), np.ones(len(pts))
    raise ValueError(f"unknown surface kind {kind!r}")


def integrate_surface(surface: SurfaceModel, f, nodes: int = 48) -> float:
    """Integral of ``f(points, charts)`` against the area form."""
    pts, charts, w, _ = _rule(surface.kind, nodes)
    return float(np.sum(w * f(pts, charts)))


def field_norm(sys, p: float, nodes: int = 48, normalized: bool = False) -> float:
    """``(integral |X_H|^p)^(1/p)`` for one autonomous system."""
    pts, charts, w, metric = _rule(sys.surface.kind, nodes)
    x = vector_field(sys, pts, charts)
    speed = np.hypot(x[:, 0], x[:, 1]) * metric
    if not np.isfinite(speed).all():
        raise ValueError(f"non-finite field samples for {sys.name}")
    total = float(np.sum(w * speed**p))
    if normalized:
        total /= sys.surface.total_area
    return total ** (1.0 / p)


def lp_length(iso: Isotopy, p: float, quadrature_nodes: int = 48, normalized: bool = False) -> float:
    """``int dt (int |X_t|^p)^(1/p)`` summed over the autonomous segments."""
    if not p >= 1:
        raise ValueError("p must be at least 1")
    return float(sum(seg.duration * field_norm(seg.system, p, quadrature_nodes, normalized)
                     for seg in iso.segments if seg.duration > 0))
