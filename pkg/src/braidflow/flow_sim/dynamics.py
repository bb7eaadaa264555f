"""Hamiltonian vector fields, RK4 integration with an energy gate, isotopies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .fields import ScalarField
from .surfaces import (
    GLUE_ROT,
    GLUE_SHIFT,
    OCT_APOTHEM,
    OCT_NORMALS,
    SurfaceModel,
    chart_swap,
    distance_to_vertices,
    polygon_canonicalize,
    sphere_chart_jacobian,
    sphere_to_ambient,
)


class EnergyGateError(RuntimeError):
    """Energy drift above tolerance: the time step is too large for this flow."""

    def __init__(self, drift: float, limit: float, dt: float):
        super().__init__(f"energy drift {drift:.3e} exceeds {limit:.3e} at dt={dt:.3e}")
        self.drift = drift
        self.limit = limit
        self.dt = dt


class DomainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HamiltonianSystem:
    surface: SurfaceModel
    H: ScalarField
    name: str = "H"
    boundary_flat: bool = True

    def __post_init__(self):
        need = 3 if self.surface.kind == "sphere" else 2
        if self.H.dim != need:
            raise ValueError(f"{self.surface.kind} needs a {need}-variable Hamiltonian")

    def value(self, pts, chart=None) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.surface.kind == "polygon_genus2":
            pts = polygon_canonicalize(pts)[0]
        return self.H.value(self.surface.ambient(pts, chart))

    def scaled(self, c: float, name: str | None = None) -> "HamiltonianSystem":
        return HamiltonianSystem(self.surface, self.H * c, name or f"{c}*{self.name}", self.boundary_flat)

    def reversed(self) -> "HamiltonianSystem":
        return HamiltonianSystem(self.surface, -self.H, f"-{self.name}", self.boundary_flat)

    def plus(self, other: ScalarField, name: str | None = None) -> "HamiltonianSystem":
        return HamiltonianSystem(self.surface, self.H + other, name or f"{self.name}+", self.boundary_flat)

    @cached_property
    def probe_points(self) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(20240601)
        return self.surface.sample(rng, 4000)

    @cached_property
    def energy_range(self) -> float:
        pts, chart = self.probe_points
        v = self.value(pts, chart)
        return float(v.max() - v.min())

    @cached_property
    def timescale(self) -> float:
        """``2 pi / omega_max`` with ``omega_max`` the largest Jacobian norm of X_H."""
        pts, chart = self.probe_points
        h = 1e-6
        cols = []
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            cols.append((vector_field(self, pts + e, chart) - vector_field(self, pts - e, chart)) / (2 * h))
        jac = np.stack(cols, axis=-1)
        omega = float(np.linalg.norm(jac, ord=2, axis=(1, 2)).max())
        return math.inf if omega == 0 else 2 * math.pi / omega

    def default_dt(self, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
        return tol.dt_factor * self.timescale


def vector_field(sys: HamiltonianSystem, pts: np.ndarray, chart: np.ndarray | None = None) -> np.ndarray:
    """X_H in chart coordinates, from dH(v) = omega(v, X_H).

    In a chart with area density rho this is ``(-dH/dy, dH/dx) / rho``; on
    the disc ``H = (x^2 + y^2)/2`` rotates counterclockwise.
    """
    pts = np.asarray(pts, dtype=float)
    kind = sys.surface.kind
    if kind == "disc":
        g = sys.H.grad(pts)
        out = np.empty_like(g)
        out[..., 0] = -g[..., 1]
        out[..., 1] = g[..., 0]
        return out
    if kind == "polygon_genus2":
        flat = pts.reshape(-1, 2)
        out = (flat @ OCT_NORMALS.T > OCT_APOTHEM).any(axis=1)
        g = sys.H.grad(flat)
        res = np.stack([-g[:, 1], g[:, 0]], axis=-1)
        if out.any():
            q, rot, _ = polygon_canonicalize(flat[out])
            gq = sys.H.grad(q)
            xq = np.stack([-gq[:, 1], gq[:, 0]], axis=-1)
            # gluings are rotations M with q = M p + t, so X_p = M^T X_q
            res[out] = np.einsum("nji,nj->ni", rot, xq)
        return res.reshape(pts.shape)
    if chart is None:
        chart = np.zeros(pts.shape[:-1], dtype=np.int8)
    amb = sphere_to_ambient(pts, chart)
    jac = sphere_chart_jacobian(pts, chart)
    gu = np.einsum("...ki,...k->...i", jac, sys.H.grad(amb))
    rho = sys.surface.area_density(pts)
    return np.stack([-gu[..., 1], gu[..., 0]], axis=-1) / rho[..., None]


def hamiltonian_vector_field(sys: HamiltonianSystem, point, chart: int = 0) -> np.ndarray:
    """X_H at a single point (chart coordinates; ``chart`` only matters on the sphere)."""
    p = np.asarray(point, dtype=float)
    if not np.isfinite(p).all() or p.shape != (2,):
        raise DomainError(f"bad point {point!r}")
    if sys.surface.kind == "disc" and p @ p > 1 + 1e-12:
        raise DomainError(f"{point!r} is outside the unit disc")
    return vector_field(sys, p[None], np.array([chart], dtype=np.int8))[0]


# --- stepping ------------------------------------------------------------------

def rk4_step(sys: HamiltonianSystem, pos: np.ndarray, chart: np.ndarray, dt: float) -> np.ndarray:
    k1 = vector_field(sys, pos, chart)
    k2 = vector_field(sys, pos + 0.5 * dt * k1, chart)
    k3 = vector_field(sys, pos + 0.5 * dt * k2, chart)
    k4 = vector_field(sys, pos + dt * k3, chart)
    return pos + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class StepEvents:
    """Side effects of one step: polygon edge exits and sphere chart changes."""

    exits: list = field(default_factory=list)  # (point index, edge) in order
    corner_hits: np.ndarray | None = None


def settle(surface: SurfaceModel, pos: np.ndarray, chart: np.ndarray, tol: Tolerances):
    """Bring a stepped state back into the model: switch charts / glue edges."""
    ev = StepEvents()
    if surface.kind == "sphere":
        r2 = np.einsum("ij,ij->i", pos, pos)
        sw = r2 > tol.chart_switch**2
        if sw.any():
            pos[sw] = chart_swap(pos[sw])
            chart[sw] = 1 - chart[sw]
    elif surface.kind == "polygon_genus2":
        viol = (pos @ OCT_NORMALS.T).max(axis=1) - OCT_APOTHEM
        out = viol > 0
        if out.any():
            idx = np.nonzero(out)[0]
            q, _, passes = polygon_canonicalize(pos[idx])
            for edges in passes:
                for j, e in zip(idx, edges):
                    if e >= 0:
                        ev.exits.append((int(j), int(e)))
            pos[idx] = q
        near = (pos @ OCT_NORMALS.T).max(axis=1) > OCT_APOTHEM - tol.corner_tol
        hits = np.zeros(len(pos), dtype=bool)
        if near.any():
            hits[near] = distance_to_vertices(pos[near]) < tol.corner_tol
        ev.corner_hits = hits
    return pos, chart, ev


# --- isotopies -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Segment:
    system: HamiltonianSystem
    duration: float
    steps: int

    @property
    def dt(self) -> float:
        return self.duration / self.steps if self.steps else 0.0


@dataclass(frozen=True, eq=False)
class Isotopy:
    """A piecewise-autonomous Hamiltonian isotopy; each segment integrates its own field."""

    segments: tuple
    name: str = "isotopy"

    def __post_init__(self):
        if not self.segments:
            raise ValueError("an isotopy needs at least one segment")
        kinds = {s.system.surface.kind for s in self.segments}
        if len(kinds) != 1:
            raise ValueError(f"segments live on different surfaces: {sorted(kinds)}")

    @property
    def surface(self) -> SurfaceModel:
        return self.segments[0].system.surface

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def steps(self) -> int:
        return sum(s.steps for s in self.segments)

    @property
    def dt(self) -> float:
        return max(s.dt for s in self.segments)

    @property
    def is_autonomous(self) -> bool:
        return len({id(s.system) for s in self.segments}) == 1

    def power(self, m: int) -> "Isotopy":
        if m < 1:
            raise ValueError("power needs m >= 1")
        return Isotopy(self.segments * m, f"({self.name})^{m}")

    def reversed(self) -> "Isotopy":
        segs = tuple(Segment(s.system.reversed(), s.duration, s.steps) for s in reversed(self.segments))
        return Isotopy(segs, f"({self.name})^-1")

    def refined(self, factor: int = 2) -> "Isotopy":
        segs = tuple(Segment(s.system, s.duration, s.steps * factor) for s in self.segments)
        return Isotopy(segs, self.name)

    def __mul__(self, other: "Isotopy") -> "Isotopy":
        """``self`` first, then ``other``."""
        return Isotopy(self.segments + other.segments, f"{self.name}*{other.name}")


def _steps_for(sys: HamiltonianSystem, duration: float, dt: float | None, tol: Tolerances) -> int:
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    if duration == 0:
        return 0
    if dt is None:
        dt = sys.default_dt(tol)
    if dt <= 0:
        raise ValueError("dt must be positive")
    return max(1, math.ceil(duration / dt - 1e-9))


def autonomous(sys: HamiltonianSystem, duration: float = 1.0, dt: float | None = None,
               tol: Tolerances = DEFAULT_TOLERANCES) -> Isotopy:
    return Isotopy((Segment(sys, float(duration), _steps_for(sys, duration, dt, tol)),), sys.name)


def make_composite(segments: Sequence, dt: float | None = None,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> Isotopy:
    """Concatenate ``(HamiltonianSystem, duration)`` pairs and/or isotopies, in order."""
    out: list[Segment] = []
    names = []
    for item in segments:
        if isinstance(item, Isotopy):
            out.extend(item.segments)
            names.append(item.name)
        else:
            sys, duration = item
            out.append(Segment(sys, float(duration), _steps_for(sys, duration, dt, tol)))
            names.append(sys.name)
    kinds = {s.system.surface.kind for s in out}
    if len(kinds) > 1:
        raise ValueError(f"segments live on different surfaces: {sorted(kinds)}")
    return Isotopy(tuple(out), "*".join(names))


# --- running ---------------------------------------------------------------

def iterate_flow(iso: Isotopy, pos: np.ndarray, chart: np.ndarray | None = None,
                 tol: Tolerances = DEFAULT_TOLERANCES, energy_every: int = 1,
                 check_energy: bool = True) -> Iterator[tuple[int, np.ndarray, np.ndarray, StepEvents]]:
    """Step a batch of points through ``iso``; yields ``(step, pos, chart, events)``.

    Energy drift is checked every ``energy_every`` steps and at the end of
    every segment; :class:`EnergyGateError` is raised on violation.  The
    yielded arrays are updated in place by later steps.
    """
    pos = np.array(pos, dtype=float).reshape(-1, 2)
    chart = np.zeros(len(pos), dtype=np.int8) if chart is None else np.array(chart, dtype=np.int8)
    surface = iso.surface
    step = 0
    for seg in iso.segments:
        sys = seg.system
        if seg.steps == 0:
            continue
        dt = seg.dt
        limit = tol.energy_rel * sys.energy_range if check_energy else math.inf
        e0 = sys.value(pos, chart) if check_energy else None
        for j in range(seg.steps):
            pos = rk4_step(sys, pos, chart, dt)
            pos, chart, ev = settle(surface, pos, chart, tol)
            step += 1
            if check_energy and ((j + 1) % energy_every == 0 or j + 1 == seg.steps):
                drift = float(np.max(np.abs(sys.value(pos, chart) - e0), initial=0.0))
                if drift > limit:
                    raise EnergyGateError(drift, limit, dt)
            yield step, pos, chart, ev


@dataclass
class Trajectory:
    initial_point: np.ndarray
    positions: np.ndarray  # (steps + 1, 2) chart coordinates
    charts: np.ndarray  # (steps + 1,)
    times: np.ndarray
    crossings: list  # (step, edge) for polygon exits
    energy_drift: float


def integrate_flow(sys: HamiltonianSystem | Isotopy, x0, duration: float | None = None,
                   dt: float | None = None, chart: int = 0,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    """RK4 trajectory of one point, recording every step."""
    iso = sys if isinstance(sys, Isotopy) else autonomous(sys, 1.0 if duration is None else duration, dt, tol)
    p = np.asarray(x0, dtype=float).reshape(1, 2)
    c = np.array([chart], dtype=np.int8)
    positions = [p[0].copy()]
    charts = [chart]
    times = [0.0]
    crossings = []
    drift = 0.0
    offset = 0
    t = 0.0
    for seg in iso.segments:
        e0 = seg.system.value(p, c)[0]
        for step, pos, ch, ev in iterate_flow(Isotopy((seg,)), p, c, tol):
            t += seg.dt
            positions.append(pos[0].copy())
            charts.append(int(ch[0]))
            times.append(t)
            crossings.extend((offset + step, e) for _, e in ev.exits)
            if ev.corner_hits is not None and ev.corner_hits.any():
                raise DomainError("trajectory passes through an octagon corner")
            drift = max(drift, abs(seg.system.value(pos, ch)[0] - e0))
        offset += seg.steps
        p = positions[-1][None].copy()
        c = np.array([charts[-1]], dtype=np.int8)
    return Trajectory(np.asarray(x0, dtype=float), np.array(positions),
                      np.array(charts, dtype=np.int8), np.array(times), crossings, float(drift))


def flow_map(iso: Isotopy, pos, chart=None, tol: Tolerances = DEFAULT_TOLERANCES,
             check_energy: bool = True) -> tuple[np.ndarray, np.ndarray]:
    pos = np.array(pos, dtype=float).reshape(-1, 2)
    chart = np.zeros(len(pos), dtype=np.int8) if chart is None else np.array(chart, dtype=np.int8)
    for _, pos, chart, _ in iterate_flow(iso, pos, chart, tol, energy_every=64, check_energy=check_energy):
        pass
    return pos, chart


def area_distortion(iso: Isotopy, pts, chart=None, h: float = 1e-4,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``|area(f(Q)) / area(Q) - 1|`` for small squares ``Q`` centred at ``pts``.

    Computed from a central-difference Jacobian of the time-one map in the
    chart of each centre, weighted by the chart area density on the sphere.
    """
    pts = np.array(pts, dtype=float).reshape(-1, 2)
    n = len(pts)
    chart = np.zeros(n, dtype=np.int8) if chart is None else np.array(chart, dtype=np.int8)
    offs = np.array([[h, 0], [-h, 0], [0, h], [0, -h]])
    probe = (pts[:, None, :] + offs).reshape(-1, 2)
    pch = np.repeat(chart, 4)
    out, och = flow_map(iso, np.concatenate([pts, probe]), np.concatenate([chart, pch]), tol,
                        check_energy=False)
    centre, cch = out[:n], och[:n]
    nb = out[n:].reshape(n, 4, 2)
    nbc = och[n:].reshape(n, 4)
    if iso.surface.kind == "sphere":
        # express neighbours in the chart of their centre
        diff = nbc != cch[:, None]
        nb[diff] = chart_swap(nb[diff])
    elif iso.surface.kind == "polygon_genus2":
        # unwrap neighbours that were glued differently from the centre
        for i in range(n):
            for k in range(4):
                if np.linalg.norm(nb[i, k] - centre[i]) > 100 * h:
                    nb[i, k] = _nearest_image(nb[i, k], centre[i])
    dx = (nb[:, 0] - nb[:, 1]) / (2 * h)
    dy = (nb[:, 2] - nb[:, 3]) / (2 * h)
    det = dx[:, 0] * dy[:, 1] - dx[:, 1] * dy[:, 0]
    if iso.surface.kind == "sphere":
        det = det * iso.surface.area_density(centre) / iso.surface.area_density(pts)
    return np.abs(det - 1.0)


def _nearest_image(p: np.ndarray, target: np.ndarray) -> np.ndarray:
    best = p
    for e in range(8):
        cand = GLUE_ROT[e] @ p + GLUE_SHIFT[e]
        if np.linalg.norm(cand - target) < np.linalg.norm(best - target):
            best = cand
    return best
