"""Named Morse Hamiltonians on each surface, and a critical-point finder."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import HamiltonianSystem
from .fields import AnnulusWell, GaussianWell, Height, Quadratic, RadialBump, ScalarField
from .surfaces import (
    OCT_APOTHEM,
    OCT_NORMALS,
    SurfaceModel,
    chart_swap,
    gluing_center,
    make_surface,
    polygon_canonicalize,
    sphere_chart_jacobian,
    sphere_to_ambient,
)


def _annulus(edge: int, amplitude: float, eps: float = 0.25) -> AnnulusWell:
    centre = gluing_center(edge)
    mid = np.arctan2(-centre[1], -centre[0])  # direction from the centre to the origin
    return AnnulusWell(tuple(centre), 0.62, 1.12, amplitude, eps, float(mid + np.pi / 8))


def _builders():
    s2 = make_surface("sphere")
    d2 = make_surface("disc")
    oc = make_surface("polygon_genus2")
    return {
        "sphere_height": lambda: HamiltonianSystem(s2, Height(1.0), "sphere_height", False),
        "sphere_perturbed_height": lambda: HamiltonianSystem(
            s2, Height(1.0, 0.1), "sphere_perturbed_height", False),
        "sphere_double_well": lambda: HamiltonianSystem(
            s2,
            GaussianWell((0.0, 0.8, 0.6), 0.5, 0.3) + GaussianWell((0.0, -0.8, 0.6), 0.5, 0.2)
            + Height(0.05),
            "sphere_double_well", False),
        "disc_radial_bump": lambda: HamiltonianSystem(
            d2, RadialBump((0.0, 0.0), 0.9, 0.25), "disc_radial_bump"),
        "disc_offcenter_bump": lambda: HamiltonianSystem(
            d2, RadialBump((0.2, -0.1), 0.65, 0.15), "disc_offcenter_bump"),
        "disc_double_bump": lambda: HamiltonianSystem(
            d2, RadialBump((-0.3, 0.0), 0.55, 0.12) + RadialBump((0.3, 0.05), 0.55, 0.08),
            "disc_double_bump"),
        "polygon_center_bump": lambda: HamiltonianSystem(
            oc, RadialBump((0.0, 0.0), 0.5, 0.08), "polygon_center_bump"),
        "polygon_multi_well": lambda: HamiltonianSystem(
            oc, _annulus(0, 0.03) + _annulus(4, 0.02) + RadialBump((0.0, 0.0), 0.15, 0.015),
            "polygon_multi_well"),
    }


CATALOG_NAMES = tuple(_builders())


def catalog_entry(name: str) -> HamiltonianSystem:
    try:
        return _builders()[name]()
    except KeyError:
        raise KeyError(f"no catalog Hamiltonian named {name!r}") from None


def make_morse_catalog(surface: SurfaceModel | str) -> list[HamiltonianSystem]:
    kind = surface if isinstance(surface, str) else surface.kind
    prefix = {"sphere": "sphere_", "disc": "disc_", "polygon_genus2": "polygon_"}[kind]
    return [catalog_entry(n) for n in CATALOG_NAMES if n.startswith(prefix)]


def disc_rotation(speed: float = 1.0) -> HamiltonianSystem:
    """Rigid rotation ``H = speed (x^2 + y^2) / 2``; not flat at the boundary."""
    return HamiltonianSystem(make_surface("disc"), Quadratic(speed), "disc_rotation", False)


def eggbeater(amplitude: float = -3.0, shift: float = 0.25, radius: float = 0.65):
    """Two overlapping off-centre bumps twisting the same way; alternate their flows.

    Equal signs matter: with opposite signs the composite is conjugate to
    its own mirror image and odd quasimorphisms vanish on it by symmetry.
    Points in the lens between the centres are passed back and forth, which
    produces hyperbolic three-strand braids.
    """
    d2 = make_surface("disc")
    left = HamiltonianSystem(d2, RadialBump((-shift, 0.0), radius, amplitude), "beater_left")
    right = HamiltonianSystem(d2, RadialBump((shift, 0.0), radius, amplitude), "beater_right")
    return left, right


# the twist is strong, so the step is coarser than the catalog default; the
# energy gate still applies to it
EGGBEATER_DT_FACTOR = 1e-2


def eggbeater_isotopy(segment: float = 1.0, dt_factor: float = EGGBEATER_DT_FACTOR, **kw):
    from .dynamics import make_composite

    left, right = eggbeater(**kw)
    dt = dt_factor * min(left.timescale, right.timescale)
    return make_composite([(left, segment), (right, segment)], dt=dt)


# --- critical points -------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    point: tuple  # chart coordinates
    chart: int
    value: float
    hessian_det: float

    @property
    def kind(self) -> str:
        if self.hessian_det < 0:
            return "saddle"
        return "extremum"


def _chart_grad(sys: HamiltonianSystem, pts: np.ndarray, chart: np.ndarray) -> np.ndarray:
    if sys.surface.kind == "sphere":
        amb = sphere_to_ambient(pts, chart)
        return np.einsum("...ki,...k->...i", sphere_chart_jacobian(pts, chart), sys.H.grad(amb))
    return sys.H.grad(pts)


def _hessian(sys, pts, chart, h=1e-5) -> np.ndarray:
    cols = []
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        cols.append((_chart_grad(sys, pts + e, chart) - _chart_grad(sys, pts - e, chart)) / (2 * h))
    hess = np.stack(cols, axis=-1)
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def _seed_grid(surface: SurfaceModel, n: int):
    g = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    if surface.kind == "sphere":
        pts = pts[np.einsum("ij,ij->i", pts, pts) <= 1.1]
        return [(pts, np.zeros(len(pts), dtype=np.int8)), (pts, np.ones(len(pts), dtype=np.int8))]
    keep = surface.contains(pts)
    if surface.kind == "disc":
        keep &= np.einsum("ij,ij->i", pts, pts) < 0.999
    pts = pts[keep]
    return [(pts, np.zeros(len(pts), dtype=np.int8))]


def critical_points(sys: HamiltonianSystem, grid: int = 121, flat_tol: float = 1e-7,
                    newton_steps: int = 60) -> list[CriticalPoint]:
    """Nondegenerate and degenerate critical points outside the flat region.

    Seeds are grid points whose gradient norm is a local minimum among grid
    neighbours; each is refined by Newton's method on the chart gradient.
    Points where ``H`` equals its flat (boundary) value to ``flat_tol`` are
    treated as part of the flat region and skipped.
    """
    scale = max(sys.energy_range, 1e-300)
    found: list[CriticalPoint] = []
    ambient_seen: list[np.ndarray] = []
    for pts, chart in _seed_grid(sys.surface, grid):
        g = np.linalg.norm(_chart_grad(sys, pts, chart), axis=1)
        vals = sys.value(pts, chart)
        cand = (np.abs(vals) > flat_tol * scale) | (not sys.boundary_flat)
        # local minima of |grad| over a coarse neighbourhood
        order = np.argsort(g)
        step = 2.0 / (grid - 1)
        taken = np.zeros(len(pts), dtype=bool)
        seeds = []
        for i in order:
            if not cand[i] or taken[i]:
                continue
            near = np.abs(pts - pts[i]).max(axis=1) <= 2.5 * step
            if g[i] <= g[near].min() + 1e-15:
                seeds.append(i)
            taken |= near & (g >= g[i])
        for i in seeds:
            x = pts[i].copy()
            c = chart[i:i + 1]
            ok = False
            for _ in range(newton_steps):
                gr = _chart_grad(sys, x[None], c)[0]
                if np.linalg.norm(gr) < 1e-12 * max(1.0, scale):
                    ok = True
                    break
                hs = _hessian(sys, x[None], c)[0]
                try:
                    dx = np.linalg.solve(hs, gr)
                except np.linalg.LinAlgError:
                    break
                x = x - dx
                if sys.surface.kind == "polygon_genus2":
                    x = polygon_canonicalize(x[None])[0][0]
                if sys.surface.kind == "sphere" and x @ x > 4.0:
                    x = chart_swap(x[None])[0]
                    c = 1 - c
                if not np.isfinite(x).all() or np.abs(x).max() > 10:
                    break
            if not ok:
                continue
            if sys.surface.kind == "disc" and x @ x >= 1.0:
                continue
            v = float(sys.value(x[None], c)[0])
            if sys.boundary_flat and abs(v) <= flat_tol * scale:
                continue
            amb = sys.surface.ambient(x[None], c)[0]
            if any(np.linalg.norm(amb - a) < 1e-6 for a in ambient_seen):
                continue
            ambient_seen.append(amb)
            det = float(np.linalg.det(_hessian(sys, x[None], c)[0]))
            found.append(CriticalPoint(tuple(map(float, x)), int(c[0]), v, det))
    return found


def is_morse(sys: HamiltonianSystem, det_tol: float = 1e-6) -> bool:
    return all(abs(cp.hessian_det) > det_tol for cp in critical_points(sys))
