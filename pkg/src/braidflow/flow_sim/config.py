"""Numerical tolerances shared by integration, tracing and estimation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    energy_rel: float = 1e-6  # allowed |H(x_t) - H(x_0)| / (max H - min H)
    dt_factor: float = 1e-3  # default dt as a fraction of the flow timescale
    separation_tol: float = 1e-3  # minimum pairwise distance of sampled configurations
    collision_tol: float = 1e-9  # |dy| at a crossing below this is a collision
    event_tol_factor: float = 1e-3  # two crossings sharing a strand closer than this * dt
    corner_tol: float = 1e-3  # polygon: distance to an octagon vertex treated as ambiguous
    pole_tol: float = 1e-3  # sphere: tracing chart must stay this far from its pole
    chart_switch: float = 2.0  # sphere: leave a chart when |u| exceeds this
    area_tol: float = 1e-5  # area-preservation probe
    max_reject_fraction: float = 0.05
    collar: float = 0.1  # disc: H must vanish for r > 1 - collar

    def with_overrides(self, **kw) -> "Tolerances":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
