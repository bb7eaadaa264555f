"""The three surface models: unit disc, round sphere, genus-2 octagon.

Points are stored as chart coordinates ``(N, 2)``.  The disc and the octagon
have a single Euclidean chart.  The sphere uses two stereographic charts:
chart 0 is ``u = (x, y) / (1 + z)`` and chart 1 is ``v = (x, -y) / (1 - z)``,
related by ``v = 1/u`` as complex numbers; both carry the area density
``4 / (1 + |u|^2)^2`` of the unit sphere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# --- octagon data -------------------------------------------------------------
# Vertices V_j at angles -pi/8 + j*pi/4; edge e_j runs V_j -> V_{j+1}.
OCT_ANGLES = -np.pi / 8 + np.arange(8) * np.pi / 4
OCT_VERTICES = np.stack([np.cos(OCT_ANGLES), np.sin(OCT_ANGLES)], axis=1)
OCT_NORMALS = np.stack([np.cos(OCT_ANGLES + np.pi / 8), np.sin(OCT_ANGLES + np.pi / 8)], axis=1)
OCT_APOTHEM = float(np.cos(np.pi / 8))
OCT_PARTNER = (2, 3, 0, 1, 6, 7, 4, 5)
# Letter of pi_1(Sigma_2, origin) emitted when a path leaves through edge j
# (a1=1, b1=2, a2=3, b2=4).  With these labels the loop around the cone point
# spells a cyclic conjugate of a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1.
EDGE_LETTER = (2, -1, -2, 1, 4, -3, -4, 3)


def _edge_gluing(e: int) -> tuple[np.ndarray, np.ndarray]:
    # orientation-preserving isometry taking e_j onto its partner, reversed
    f = OCT_PARTNER[e]
    a, b = OCT_VERTICES[e], OCT_VERTICES[(e + 1) % 8]
    c, d = OCT_VERTICES[(f + 1) % 8], OCT_VERTICES[f]
    ang = np.arctan2(*(d - c)[::-1]) - np.arctan2(*(b - a)[::-1])
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    rot = np.round(rot)  # quarter turns: entries are exactly 0 or +-1
    return rot, c - rot @ a


_GLUE = [_edge_gluing(e) for e in range(8)]
GLUE_ROT = np.stack([g[0] for g in _GLUE])
GLUE_SHIFT = np.stack([g[1] for g in _GLUE])


def gluing_center(e: int) -> np.ndarray:
    """Fixed point of the gluing rotation of edge ``e`` (where the edge lines meet)."""
    rot, shift = GLUE_ROT[e], GLUE_SHIFT[e]
    return np.linalg.solve(np.eye(2) - rot, shift)


@dataclass(frozen=True)
class SurfaceModel:
    kind: str
    total_area: float
    description: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in ("disc", "sphere", "polygon_genus2"):
            raise ValueError(f"unknown surface kind {self.kind!r}")

    # -- membership and sampling ------------------------------------------------
    def contains(self, pts: np.ndarray, chart: np.ndarray | None = None) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.kind == "disc":
            return np.einsum("...i,...i->...", pts, pts) <= 1.0
        if self.kind == "polygon_genus2":
            return np.all(pts @ OCT_NORMALS.T <= OCT_APOTHEM + 1e-12, axis=-1)
        return np.isfinite(pts).all(axis=-1)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Uniform points w.r.t. the area form, as ``(coords, chart)``."""
        if self.kind == "sphere":
            p = rng.standard_normal((size, 3))
            p /= np.linalg.norm(p, axis=1, keepdims=True)
            return sphere_from_ambient(p)
        out = np.empty((0, 2))
        while len(out) < size:
            cand = rng.uniform(-1.0, 1.0, size=(2 * (size - len(out)) + 4, 2))
            out = np.concatenate([out, cand[self.contains(cand)]])
        return out[:size], np.zeros(size, dtype=np.int8)

    def ambient(self, pts: np.ndarray, chart: np.ndarray | None = None) -> np.ndarray:
        """Points in the coordinates Hamiltonians are written in."""
        if self.kind == "sphere":
            return sphere_to_ambient(pts, chart)
        return np.asarray(pts, dtype=float)

    def area_density(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.kind == "sphere":
            return 4.0 / (1.0 + np.einsum("...i,...i->...", pts, pts)) ** 2
        return np.ones(pts.shape[:-1])


def disc() -> SurfaceModel:
    return SurfaceModel("disc", float(np.pi), "closed unit disc, area form dx^dy")


def sphere() -> SurfaceModel:
    return SurfaceModel("sphere", float(4 * np.pi), "unit sphere, solid-angle area form")


def polygon_genus2() -> SurfaceModel:
    return SurfaceModel(
        "polygon_genus2",
        float(2 * np.sqrt(2)),
        "regular octagon with opposite-pattern edge pairing, flat cone point",
    )


SURFACES = {"disc": disc, "sphere": sphere, "polygon_genus2": polygon_genus2}


def make_surface(kind: str) -> SurfaceModel:
    try:
        return SURFACES[kind]()
    except KeyError:
        raise ValueError(f"unknown surface kind {kind!r}") from None


# --- sphere charts ----------------------------------------------------------

def sphere_to_ambient(u: np.ndarray, chart: np.ndarray | None = None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    s = 1.0 + np.einsum("...i,...i->...", u, u)
    x = 2 * u[..., 0] / s
    y = 2 * u[..., 1] / s
    z = (2.0 - s) / s
    if chart is not None:
        flip = np.where(np.asarray(chart) == 1, -1.0, 1.0)
        y = y * flip
        z = z * flip
    return np.stack([x, y, z], axis=-1)


def sphere_from_ambient(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chart coordinates, using chart 0 on the closed northern hemisphere."""
    p = np.asarray(p, dtype=float)
    north = p[..., 2] >= 0
    chart = np.where(north, 0, 1).astype(np.int8)
    sgn = np.where(north, 1.0, -1.0)
    den = 1.0 + sgn * p[..., 2]
    u = np.stack([p[..., 0] / den, sgn * p[..., 1] / den], axis=-1)
    return u, chart


def chart_swap(u: np.ndarray) -> np.ndarray:
    """The transition ``u -> 1/u`` (complex), valid in both directions."""
    u = np.asarray(u, dtype=float)
    r2 = np.einsum("...i,...i->...", u, u)[..., None]
    return np.stack([u[..., 0], -u[..., 1]], axis=-1) / r2


def sphere_chart_jacobian(u: np.ndarray, chart: np.ndarray | None = None) -> np.ndarray:
    """d(ambient)/d(chart), shape ``(..., 3, 2)``."""
    u = np.asarray(u, dtype=float)
    s = 1.0 + np.einsum("...i,...i->...", u, u)
    u1, u2 = u[..., 0], u[..., 1]
    s2 = s * s
    jac = np.empty(u.shape[:-1] + (3, 2))
    jac[..., 0, 0] = 2 / s - 4 * u1 * u1 / s2
    jac[..., 0, 1] = -4 * u1 * u2 / s2
    jac[..., 1, 0] = -4 * u1 * u2 / s2
    jac[..., 1, 1] = 2 / s - 4 * u2 * u2 / s2
    jac[..., 2, 0] = -4 * u1 / s2
    jac[..., 2, 1] = -4 * u2 / s2
    if chart is not None:
        flip = np.where(np.asarray(chart) == 1, -1.0, 1.0)[..., None]
        jac[..., 1, :] *= flip
        jac[..., 2, :] *= flip
    return jac


def to_tracing_chart(u: np.ndarray, chart: np.ndarray) -> np.ndarray:
    """Express sphere points in chart 0 (the projection from the south pole)."""
    u = np.asarray(u, dtype=float)
    chart = np.asarray(chart)
    if not (chart == 1).any():
        return u
    out = u.copy()
    sel = chart == 1
    out[sel] = chart_swap(u[sel])
    return out


# --- octagon edge handling ----------------------------------------------------

def polygon_canonicalize(pts: np.ndarray, max_passes: int = 3):
    """Map points outside the octagon back in through the gluing of the crossed edge.

    Returns ``(inside_pts, rotation, edges)``: ``rotation[i]`` is the linear
    part of the composite gluing applied to point ``i`` and ``edges`` lists,
    per pass, the exit edge (or -1) of each point.
    """
    pts = np.array(pts, dtype=float)
    flat = pts.reshape(-1, 2)
    rot = np.broadcast_to(np.eye(2), (len(flat), 2, 2)).copy()
    passes = []
    for _ in range(max_passes):
        viol = flat @ OCT_NORMALS.T - OCT_APOTHEM
        edge = np.argmax(viol, axis=1)
        out = viol[np.arange(len(flat)), edge] > 0
        if not out.any():
            break
        e = edge[out]
        flat[out] = np.einsum("nij,nj->ni", GLUE_ROT[e], flat[out]) + GLUE_SHIFT[e]
        rot[out] = np.einsum("nij,njk->nik", GLUE_ROT[e], rot[out])
        passes.append(np.where(out, edge, -1))
    return flat.reshape(pts.shape), rot.reshape(pts.shape[:-1] + (2, 2)), passes


def distance_to_vertices(pts: np.ndarray) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    d = pts[..., None, :] - OCT_VERTICES
    return np.sqrt(np.einsum("...ki,...ki->...k", d, d)).min(axis=-1)
