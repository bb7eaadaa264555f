"""Monte-Carlo estimates of braid and loop quasimorphisms of Hamiltonian flows.

Every sample ``j`` draws from its own generator seeded by ``(seed, j)``, and
samples are processed in fixed chunks whose results are combined in index
order, so reports do not depend on the number of worker threads.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .braids import make_eta
from .flow_sim.catalog import critical_points
from .flow_sim.config import DEFAULT_TOLERANCES, Tolerances
from .flow_sim.dynamics import HamiltonianSystem, Isotopy, autonomous, iterate_flow, vector_field
from .flow_sim.fields import RadialBump, ScalarField
from .flow_sim.lp import integrate_surface, lp_length
from .flow_sim.surfaces import to_tracing_chart
from .quasimorphisms import (
    Quasimorphism,
    artin_braid,
    brooks_counting,
    cyclic_dehn_core,
    exponent_sum_qm,
    linking_qm,
    rademacher_qm,
    surface_group,
    vanishing_combination,
)
from .tracing import default_basepoints, trace_braids, trace_loop_classes, winding_decomposition
from .words import GroupWord, parse_words

CHUNK = 256
MAX_REDRAWS = 50


def thread_count() -> int:
    """Worker threads, capped by ``BRAIDFLOW_THREADS``."""
    env = os.environ.get("BRAIDFLOW_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


class ExcessiveRejection(RuntimeError):
    pass


class NotRegular(ValueError):
    """The point is not a regular point of the Hamiltonian."""


# --- reports ------------------------------------------------------------------

@dataclass
class EstimateReport:
    estimate: float
    samples: int
    std_error: float
    k: int
    seed: int
    constants_used: dict = field(default_factory=dict)
    rejected_samples: int = 0
    rejection_reasons: dict = field(default_factory=dict)
    label: str = ""
    config_hash: str = ""
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def flagged(self) -> bool:
        return self.rejected_samples > DEFAULT_TOLERANCES.max_reject_fraction * self.samples

    @property
    def homogenization_error(self) -> float:
        return float(self.constants_used.get("homogenization_error", 0.0))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "estimate": self.estimate,
            "std_error": self.std_error,
            "samples": self.samples,
            "k": self.k,
            "seed": self.seed,
            "constants_used": dict(sorted(self.constants_used.items())),
            "rejected_samples": self.rejected_samples,
            "rejection_reasons": dict(sorted(self.rejection_reasons.items())),
            "flagged": self.flagged,
            "config_hash": self.config_hash,
        }


def _summarize(values: np.ndarray, scale: float) -> tuple[float, float]:
    vals = [float(v) for v in values]
    n = len(vals)
    mean = math.fsum(vals) / n
    if n < 2:
        return mean / scale, 0.0
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    return mean / scale, math.sqrt(var / n) / scale


def _qvalue(q: Quasimorphism, cache: dict, word) -> float:
    key = word.letters
    v = cache.get(key)
    if v is None:
        v = float(Fraction(q(word)))
        cache[key] = v
    return v


# --- sampling engine ------------------------------------------------------------

def _draw(surface, rng: np.random.Generator, n: int, tol: Tolerances) -> tuple[np.ndarray, np.ndarray, int]:
    """``n`` uniform points, pairwise separated; returns the number of redraws too."""
    redraws = 0
    while True:
        pts, ch = surface.sample(rng, n)
        if n < 2:
            return pts, ch, redraws
        amb = surface.ambient(pts, ch)
        d = np.linalg.norm(amb[:, None] - amb[None], axis=-1)
        d[np.diag_indices(n)] = np.inf
        if d.min() >= tol.separation_tol:
            return pts, ch, redraws
        redraws += 1


def _run_samples(trace: Callable, surface, n: int, samples: int, seed: int, tol: Tolerances,
                 evaluate: Callable) -> tuple[list[np.ndarray], dict]:
    """Draw, trace and evaluate ``samples`` configurations.

    ``trace(points, charts)`` returns a BatchTrace; ``evaluate(word)`` a float.
    Rejected samples are redrawn from their own generator.  Returns one value
    array per checkpoint and the rejection counts.
    """
    starts = list(range(0, samples, CHUNK))

    def chunk(start: int):
        idx = range(start, min(samples, start + CHUNK))
        rngs = [np.random.default_rng(np.random.SeedSequence([seed, j])) for j in idx]
        reasons: dict[str, int] = {}
        out = None
        pending = list(range(len(rngs)))
        for _ in range(MAX_REDRAWS):
            if not pending:
                break
            drawn = [_draw(surface, rngs[i], n, tol) for i in pending]
            sep = sum(d[2] for d in drawn)
            if sep:
                reasons["separation"] = reasons.get("separation", 0) + sep
            pts = np.stack([d[0] for d in drawn])
            chs = np.stack([d[1] for d in drawn])
            res = trace(pts, chs)
            if out is None:
                out = [np.zeros(len(rngs)) for _ in res.words]
            still = []
            for slot, i in enumerate(pending):
                why = res.rejected[slot]
                if why:
                    reasons[why] = reasons.get(why, 0) + 1
                    still.append(i)
                    continue
                for c, words in enumerate(res.words):
                    out[c][i] = evaluate(words[slot])
            pending = still
        if pending:
            raise ExcessiveRejection(f"{len(pending)} samples could not be traced")
        return out, reasons

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        parts = list(pool.map(chunk, starts))
    values = [np.concatenate([p[0][c] for p in parts]) for c in range(len(parts[0][0]))]
    reasons: dict[str, int] = {}
    for _, r in parts:
        for key, v in r.items():
            reasons[key] = reasons.get(key, 0) + v
    return values, reasons


def _report(values, scale, k, seed, q, reasons, label, config, samples) -> EstimateReport:
    est, se = _summarize(values, scale)
    constants = {}
    if q.defect_bound is not None:
        constants["defect"] = q.defect_bound
        constants["homogenization_error"] = q.defect_bound / k
    rejected = int(sum(reasons.values()))
    return EstimateReport(est, samples, se, k, seed, constants, rejected, reasons, label,
                          config_hash(config), np.asarray(values) / scale)


def _check_braid_domain(q: Quasimorphism, n: int, iso: Isotopy) -> None:
    if q.domain != artin_braid(n):
        raise ValueError(f"{q.name} lives on {q.domain}, traced braids have {n} strands")
    if iso.surface.kind not in ("disc", "sphere"):
        raise ValueError("braid estimates need the disc or the sphere")


# --- Gambaudo-Ghys ------------------------------------------------------------------

def gg_power_series(iso: Isotopy, q: Quasimorphism, n: int, samples: int, k: int,
                    ms: Sequence[int], seed: int, basepoints=None,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> list[EstimateReport]:
    """``Phi(f^(m k)) / k`` for every ``m`` in ``ms`` from one run of ``f^(k max(ms))``."""
    _check_braid_domain(q, n, iso)
    if samples < 1 or k < 1 or not ms or min(ms) < 1:
        raise ValueError("need samples >= 1, k >= 1 and powers m >= 1")
    z = default_basepoints(n) if basepoints is None else np.asarray(basepoints, dtype=float)
    ms = sorted(set(int(m) for m in ms))
    full = iso.power(k * ms[-1])
    checkpoints = [m * k * iso.steps for m in ms]
    cache: dict = {}
    values, reasons = _run_samples(
        lambda p, c: trace_braids(full, p, c, z, tol, checkpoints),
        iso.surface, n, samples, seed, tol, lambda w: _qvalue(q, cache, w))
    out = []
    for m, vals in zip(ms, values):
        config = {"op": "gg", "isotopy": iso.name, "duration": iso.duration, "steps": iso.steps,
                  "q": q.name, "n": n, "samples": samples, "k": k, "m": m, "seed": seed,
                  "basepoints": z.tolist(), "tol": tol.as_dict()}
        out.append(_report(vals, k, k, seed, q, reasons, f"{q.name}[{iso.name}^{m}]", config, samples))
    return out


def gg_estimate(iso: Isotopy, q: Quasimorphism, n: int, samples: int, seed: int,
                basepoints=None, tol: Tolerances = DEFAULT_TOLERANCES) -> EstimateReport:
    """Mean of ``q`` over braids traced from uniformly drawn ``n``-point configurations."""
    return gg_power_series(iso, q, n, samples, 1, [1], seed, basepoints, tol)[0]


def gg_homogenized(sys: HamiltonianSystem | Isotopy, q: Quasimorphism, n: int, samples: int,
                   k: int = 32, seed: int = 0, duration: float = 1.0, basepoints=None,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> EstimateReport:
    """``Phi(f^k) / k``; the report carries the ``D/k`` homogenization error."""
    iso = sys if isinstance(sys, Isotopy) else autonomous(sys, duration, tol=tol)
    return gg_power_series(iso, q, n, samples, k, [1], seed, basepoints, tol)[0]


# --- Polterovich --------------------------------------------------------------------

def polterovich_estimate(iso: Isotopy | HamiltonianSystem, q: Quasimorphism, samples: int,
                         k: int = 32, seed: int = 0, duration: float = 1.0,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> EstimateReport:
    """Area average of ``q`` on the loop classes of ``f^k``, divided by ``k``."""
    if isinstance(iso, HamiltonianSystem):
        iso = autonomous(iso, duration, tol=tol)
    if iso.surface.kind != "polygon_genus2":
        raise ValueError("Polterovich estimates live on the octagon")
    if q.domain != surface_group(2):
        raise ValueError(f"{q.name} lives on {q.domain}, not the genus-2 surface group")
    full = iso.power(k)
    cache: dict = {}
    values, reasons = _run_samples(
        lambda p, c: trace_loop_classes(full, p.reshape(-1, 2), tol),
        iso.surface, 1, samples, seed, tol, lambda w: _qvalue(q, cache, w))
    config = {"op": "polterovich", "isotopy": iso.name, "duration": iso.duration,
              "steps": iso.steps, "q": q.name, "samples": samples, "k": k, "seed": seed,
              "tol": tol.as_dict()}
    return _report(values[0], k, k, seed, q, reasons, f"{q.name}[{iso.name}]", config, samples)


def level_classes(sys: HamiltonianSystem, samples: int = 200, duration: float = 40.0,
                  seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> list[GroupWord]:
    """Primitive cyclic cores of loop classes traced along level curves of ``sys``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    pts, _ = sys.surface.sample(rng, samples)
    res = trace_loop_classes(autonomous(sys, duration, tol=tol), pts, tol)
    found: dict[tuple, GroupWord] = {}
    for w in res.words[-1]:
        if w is None:
            continue
        core = cyclic_dehn_core(w, 2).letters
        if not core:
            continue
        n = len(core)
        root = next(core[:d] for d in range(1, n + 1) if n % d == 0 and core[:d] * (n // d) == core)
        key = min(root[i:] + root[:i] for i in range(len(root)))
        found.setdefault(key, GroupWord(4, key))
    return [found[key] for key in sorted(found)]


# --- named quasimorphisms ----------------------------------------------------------

# Alternating S/R words are determined by their R exponents; a pattern whose
# exponent sequence reversed and negated is a rotation of itself counts the
# same as its inverse and vanishes, and one that is a rotation of another's
# reversed negation only repeats it with a sign.  These four are independent.
B3_BROOKS_PATTERNS = ((1, 2, 1, 2, 1, -2), (1, 2, 1, 2, 1, 2, 1, -2),
                      (1, 2, 1, 2, 1, 2, 1, 2, 1, -2), (1, 2, 1, 2, 1, -2, 1, 2, 1, -2))
SURFACE_BROOKS_PATTERNS = ((1, 2), (1, -2), (3, 4), (1, 3), (2, -4), (1, 2, 3))


def autonomous_vanishing_qm() -> Quasimorphism:
    """Combination of Rademacher, exponent sum and Brooks counts on B_3 killing the eta braids."""
    family = [rademacher_qm(), exponent_sum_qm(3)]
    family += [brooks_counting(p, artin_braid(3)) for p in B3_BROOKS_PATTERNS]
    targets = [make_eta(i, 3) for i in (2, 3)]
    q = vanishing_combination(family, targets)
    if q is None:
        raise RuntimeError("no nonzero combination vanishes on the eta braids")
    return q


def level_vanishing_qm(sys: HamiltonianSystem, seed: int = 0) -> Quasimorphism:
    """Brooks combination on the genus-2 group vanishing on the traced level classes."""
    family = [brooks_counting(p, surface_group(2)) for p in SURFACE_BROOKS_PATTERNS]
    targets = level_classes(sys, seed=seed) or [GroupWord(4, ())]
    q = vanishing_combination(family, targets)
    if q is None:
        raise RuntimeError("no nonzero combination vanishes on the level classes")
    return q


def combo_from_file(path, n: int = 3) -> Quasimorphism:
    """Vanishing combination read from a text file.

    Lines ``member <name>`` list the family (any name :func:`resolve_quasimorphism`
    accepts); the remaining lines are target words in the word format, under
    ``n=<alphabet size>`` headers.
    """
    with open(path) as fh:
        text = fh.read()
    members, rest = [], []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line.startswith("member "):
            members.append(resolve_quasimorphism(line[7:].strip(), n))
        else:
            rest.append(line)
    targets = [w for _, w in parse_words("\n".join(rest))]
    q = vanishing_combination(members, targets)
    if q is None:
        raise ValueError(f"{path}: no nonzero combination of the members vanishes on the targets")
    return q


def resolve_quasimorphism(name: str, n: int = 2) -> Quasimorphism:
    """``lk<i><j>``, ``expsum``, ``rademacher``, ``eta-vanishing``, ``brooks:<letters>``
    (braids on three strands), ``surface-brooks:<letters>`` (genus-2 loops) or
    ``combo:<file>`` (see :func:`combo_from_file`)."""
    if name.startswith("lk") and len(name) == 4 and name[2:].isdigit():
        return linking_qm(int(name[2]), int(name[3]), n)
    if name == "expsum":
        return exponent_sum_qm(n)
    if name == "rademacher":
        return rademacher_qm()
    if name == "eta-vanishing":
        return autonomous_vanishing_qm()
    if name.startswith("brooks:"):
        return brooks_counting([int(x) for x in name[7:].split(",")], artin_braid(3))
    if name.startswith("surface-brooks:"):
        return brooks_counting([int(x) for x in name[15:].split(",")], surface_group(2))
    if name.startswith("combo:"):
        return combo_from_file(name[6:], n)
    raise KeyError(f"unknown quasimorphism {name!r}")


# --- Calabi ----------------------------------------------------------------------

def calabi_direct(sys: HamiltonianSystem, duration: float = 1.0, nodes: int = 160) -> float:
    """``duration * integral of H`` over the disc."""
    if sys.surface.kind != "disc":
        raise ValueError("the Calabi invariant is computed on the disc")
    return duration * integrate_surface(sys.surface, lambda p, c: sys.H.value(p), nodes)


# --- Morse decomposition -----------------------------------------------------------

@dataclass
class DecompositionRow:
    k: int
    m: int
    remainder: int


@dataclass
class Decomposition:
    point: tuple
    anchor: tuple
    period: float
    frequency: float  # level-curve windings per application of the base map
    level_word: tuple
    rows: list

    @property
    def max_remainder(self) -> int:
        return max((r.remainder for r in self.rows), default=0)


def _orbit_periods(sys: HamiltonianSystem, pts: np.ndarray, charts: np.ndarray, max_time: float,
                   tol: Tolerances) -> tuple[np.ndarray, list]:
    """First-return times through the normal line at the start, and the sampled orbits."""
    S = len(pts)
    x0 = to_tracing_chart(pts, charts) if sys.surface.kind == "sphere" else pts.copy()
    v0 = vector_field(sys, pts, charts)
    if sys.surface.kind == "sphere":
        # push the velocity to the tracing chart by finite differences
        h = 1e-7
        v0 = (to_tracing_chart(pts + h * v0, charts) - x0) / h
    speed = np.linalg.norm(v0, axis=1)
    direction = v0 / np.where(speed > 0, speed, 1.0)[:, None]
    period = np.full(S, np.nan)
    far = np.zeros(S)
    orbits = [[x0[i].copy()] for i in range(S)]
    iso = autonomous(sys, max_time, tol=tol)
    prev_s = np.zeros(S)
    dt = iso.dt
    for step, pos, ch, _ in iterate_flow(iso, pts, charts, tol, energy_every=64):
        cur = to_tracing_chart(pos, ch) if sys.surface.kind == "sphere" else pos
        rel = cur - x0
        dist = np.linalg.norm(rel, axis=1)
        far = np.maximum(far, dist)
        s = np.einsum("ij,ij->i", rel, direction)
        ret = np.isnan(period) & (prev_s < 0) & (s >= 0) & (dist < 0.25 * far) & (far > 0)
        if ret.any():
            lam = prev_s[ret] / (prev_s[ret] - s[ret])
            period[ret] = (step - 1 + lam) * dt
        for i in np.nonzero(np.isnan(period) | ret)[0]:
            orbits[i].append(cur[i].copy())
        prev_s = s
        if not np.isnan(period).any():
            break
    return period, orbits


def _winding(orbit: np.ndarray, p: np.ndarray) -> int:
    d = orbit - p
    ang = np.arctan2(d[:, 1], d[:, 0])
    turn = np.diff(np.concatenate([ang, ang[:1]]))
    turn = (turn + np.pi) % (2 * np.pi) - np.pi
    return int(round(turn.sum() / (2 * np.pi)))


def decomposition_verify(sys: HamiltonianSystem, x, K: int = 32, base_duration: float = 1.0,
                         chart=None, grad_threshold: float = 1e-3, min_frequency: float = 0.0,
                         max_period: float | None = None,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> list[Decomposition]:
    """Winding exponents of ``h^k`` on the level classes of the points ``x``, ``k = 1..K``.

    ``h`` is the time-``base_duration`` map of ``sys``.  For each point the
    level word is the braid of (enclosed extremum, point) over one period of
    its level curve.  Points whose gradient is below ``grad_threshold`` times
    the energy range, whose orbit does not close within ``max_period``, or
    whose winding frequency is below ``min_frequency`` are not regular and
    raise :class:`NotRegular`.  Points where the field vanishes identically
    give rows of zeros.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    S = len(pts)
    charts = np.zeros(S, np.int8) if chart is None else np.broadcast_to(np.asarray(chart, np.int8), (S,)).copy()
    v = vector_field(sys, pts, charts)
    fixed = np.linalg.norm(v, axis=1) == 0
    grad_scale = sys.energy_range / max(sys.timescale, 1e-300)
    weak = (np.linalg.norm(v, axis=1) < grad_threshold * grad_scale) & ~fixed
    if weak.any():
        raise NotRegular(f"points {np.nonzero(weak)[0].tolist()} have a small gradient")
    out: list[Decomposition | None] = [None] * S
    live = np.nonzero(~fixed)[0]
    for i in np.nonzero(fixed)[0]:
        out[i] = Decomposition(tuple(pts[i]), tuple(pts[i]), math.inf, 0.0, (),
                               [DecompositionRow(k, 0, 0) for k in range(1, K + 1)])
    if len(live) == 0:
        return out
    max_period = max_period or 50 * sys.timescale
    period, orbits = _orbit_periods(sys, pts[live], charts[live], max_period, tol)
    if np.isnan(period).any():
        bad = live[np.isnan(period)].tolist()
        raise NotRegular(f"level curves through points {bad} do not close")
    freq = base_duration / period
    if (freq < min_frequency).any():
        raise NotRegular(f"points {live[freq < min_frequency].tolist()} wind too slowly")
    extrema = [cp for cp in critical_points(sys) if cp.kind == "extremum"]
    cand = np.array([cp.point for cp in extrema]) if extrema else np.zeros((0, 2))
    cch = np.array([cp.chart for cp in extrema], np.int8)
    if sys.surface.kind == "sphere" and len(cand):
        # the south pole has no image in the tracing chart
        at_pole = (cch == 1) & (np.einsum("ij,ij->i", cand, cand) == 0)
        cand = to_tracing_chart(cand[~at_pole], cch[~at_pole])
    anchors = []
    for j, i in enumerate(live):
        orbit = np.array(orbits[j])
        start = orbit[0]
        inside = [c for c in cand if _winding(orbit, c) != 0]
        if not inside:
            raise NotRegular(f"level curve through point {int(i)} encloses no extremum")
        anchors.append(min(inside, key=lambda c: np.linalg.norm(c - start)))
    anchors = np.array(anchors)
    # configurations (anchor, point) in chart coordinates
    if sys.surface.kind == "sphere":
        anchor_chart = np.zeros(len(live), np.int8)
        cfg_pts = np.stack([anchors, to_tracing_chart(pts[live], charts[live])], axis=1)
        cfg_ch = np.stack([anchor_chart, anchor_chart], axis=1)
        big = np.einsum("ij,ij->i", cfg_pts[:, 1], cfg_pts[:, 1]) > tol.chart_switch**2
        if big.any():
            raise NotRegular("points too close to the south pole for the tracing chart")
    else:
        cfg_pts = np.stack([anchors, pts[live]], axis=1)
        cfg_ch = np.zeros((len(live), 2), np.int8)
    levels = []
    for j in range(len(live)):
        lev_iso = autonomous(sys, float(period[j]), tol=tol)
        res = trace_braids(lev_iso, cfg_pts[j:j + 1], cfg_ch[j:j + 1], None, tol)
        w = res.words[-1][0]
        if w is None or not w.letters:
            raise NotRegular(f"level word of point {int(live[j])} is trivial or ambiguous")
        levels.append(w)
    base = autonomous(sys, base_duration, tol=tol)
    full = base.power(K)
    res = trace_braids(full, cfg_pts, cfg_ch, None, tol, [k * base.steps for k in range(1, K + 1)])
    for j, i in enumerate(live):
        if res.rejected[j]:
            raise NotRegular(f"trace of point {int(i)} rejected: {res.rejected[j]}")
        rows = []
        for k in range(1, K + 1):
            m, rem = winding_decomposition(res.words[k - 1][j].word, levels[j].word)
            rows.append(DecompositionRow(k, m, rem))
        out[i] = Decomposition(tuple(pts[i]), tuple(anchors[j]), float(period[j]), float(freq[j]),
                               levels[j].letters, rows)
    return out


def regular_points(sys: HamiltonianSystem, count: int, seed: int, grad_fraction: float = 0.05,
                   margin: float = 0.1, max_period: float | None = None,
                   tol: Tolerances = DEFAULT_TOLERANCES):
    """Uniform points whose gradient is not small, which keep ``margin`` from critical
    points and whose level curve closes within ``max_period`` (default 50 flow timescales).

    On the sphere points are also kept inside the tracing chart.  Returns
    ``(coords, charts)``.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    crit = critical_points(sys)
    crit_amb = (np.array([sys.surface.ambient(np.array([cp.point]), np.array([cp.chart], np.int8))[0]
                          for cp in crit]) if crit else None)
    grad_scale = sys.energy_range / max(sys.timescale, 1e-300)
    keep_p, keep_c = [], []
    for _ in range(MAX_REDRAWS):
        pts, ch = sys.surface.sample(rng, 4 * count)
        ok = np.linalg.norm(vector_field(sys, pts, ch), axis=1) >= grad_fraction * grad_scale
        if crit_amb is not None:
            amb = sys.surface.ambient(pts, ch)
            dist = np.linalg.norm(amb[:, None, :] - crit_amb[None], axis=2).min(axis=1)
            ok &= dist >= margin
        if sys.surface.kind == "sphere":
            u = to_tracing_chart(pts, ch)
            ok &= np.einsum("ij,ij->i", u, u) <= (tol.chart_switch - margin) ** 2
        pts, ch = pts[ok][:2 * count], ch[ok][:2 * count]
        if len(pts):
            period, _ = _orbit_periods(sys, pts, ch, max_period or 50 * sys.timescale, tol)
            ok = ~np.isnan(period)
        keep_p.extend(pts[ok])
        keep_c.extend(ch[ok])
        if len(keep_p) >= count:
            return np.array(keep_p[:count]), np.array(keep_c[:count], np.int8)
    raise ExcessiveRejection(f"found only {len(keep_p)} of {count} regular points")


# --- certificates --------------------------------------------------------------------

@dataclass
class LowerBoundCertificate:
    target: str
    bound: float
    c_lower: float
    inputs: dict

    def to_dict(self) -> dict:
        return {"target": self.target, "bound": self.bound, "c_lower": self.c_lower,
                "inputs": dict(sorted(self.inputs.items()))}


def c_lower(report: EstimateReport) -> float:
    """``|estimate| - 2 std_error - homogenization error``."""
    return abs(report.estimate) - 2 * report.std_error - report.homogenization_error


def distance_lower_bound(report: EstimateReport, D: float | None, C: float | None, m: int,
                         k: int) -> LowerBoundCertificate:
    """``max(0, (c_lower m - k D) / C)``; ``C`` is an external hypothesis, never assumed."""
    if D is None or C is None:
        raise ValueError("distance bounds need the defect D and a supplied Lipschitz constant C")
    if D < 0 or C <= 0 or m < 1 or k < 1:
        raise ValueError("need D >= 0, C > 0, m >= 1, k >= 1")
    c = c_lower(report)
    bound = max(0.0, (c * m - k * D) / C)
    return LowerBoundCertificate(
        f"d_p(f^{m}, A^{k})", bound, c,
        {"estimate": report.estimate, "std_error": report.std_error,
         "homogenization_error": report.homogenization_error, "D": D, "C": C,
         "C_is_hypothesis": True, "m": m, "k": k})


def aut_norm_lower_bound(report: EstimateReport, D: float) -> float:
    """Lower bound ``c_lower / D + 1`` on the autonomous norm (``1`` when ``c_lower <= 0``)."""
    c = c_lower(report)
    if c <= 0:
        return 1.0
    if D <= 0:
        raise ValueError("unbounded certificate: a zero-defect quasimorphism is nonzero here")
    return c / D + 1.0


# --- experiments -----------------------------------------------------------------------

def default_perturbation(surface_kind: str) -> ScalarField:
    if surface_kind != "disc":
        raise ValueError("the default perturbation lives on the disc")
    return RadialBump((0.25, 0.2), 0.45, 0.1)


@dataclass
class ContinuityRow:
    delta: float
    difference: float
    std_error: float
    estimate: float


def continuity_experiment(sys: HamiltonianSystem, deltas: Sequence[float], q: Quasimorphism,
                          n: int, samples: int, k: int = 8, seed: int = 0,
                          perturbation: ScalarField | None = None, duration: float = 1.0,
                          tol: Tolerances = DEFAULT_TOLERANCES):
    """``|Phi(h) - Phi(h_delta)|`` for ``H + delta * bump`` at common random numbers."""
    bump = perturbation or default_perturbation(sys.surface.kind)
    base = gg_homogenized(sys, q, n, samples, k, seed, duration, tol=tol)
    rows = []
    for delta in deltas:
        if delta == 0:
            rows.append(ContinuityRow(0.0, 0.0, base.std_error, base.estimate))
            continue
        pert = sys.plus(bump * float(delta), f"{sys.name}+{delta}*bump")
        rep = gg_homogenized(pert, q, n, samples, k, seed, duration, tol=tol)
        rows.append(ContinuityRow(float(delta), abs(rep.estimate - base.estimate),
                                  rep.std_error, rep.estimate))
    return base, rows


@dataclass
class LipschitzRow:
    name: str
    estimate: float
    std_error: float
    length: float
    ratio: float


def lipschitz_ratio_probe(flows: Sequence[Isotopy], q: Quasimorphism, n: int, p: float,
                          samples: int, seed: int = 0, k: int = 1,
                          tol: Tolerances = DEFAULT_TOLERANCES):
    """Empirical ``|Phi| / l_p`` per flow and its maximum.

    Not a certified constant: ``l_p`` of the generating path only bounds the
    norm from above, so the maximum is merely a lower bound on the best C.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    rows = []
    for iso in flows:
        length = lp_length(iso, p)
        if length == 0:
            raise ValueError(f"{iso.name} has zero length")
        rep = gg_power_series(iso, q, n, samples, k, [1], seed, tol=tol)[0]
        rows.append(LipschitzRow(iso.name, rep.estimate, rep.std_error, length,
                                 abs(rep.estimate) / length))
    return max(r.ratio for r in rows), rows


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> dict:
    """Least-squares line with slope standard error and R^2."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    A = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def growth_experiment(iso: Isotopy, q: Quasimorphism, n: int, samples: int, k: int,
                      ms: Sequence[int], seed: int, tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """``Phi(f^(m k)) / k`` over ``m``, its linear fit and the slope's standard error.

    The slope error comes from the per-sample slopes, so the correlation
    between checkpoints of the single run is accounted for.  ``homogenized``
    is the longest run read as ``Phi(f^K) / K`` with ``K = k max(ms)``.
    """
    ms = sorted(set(int(m) for m in ms))
    if len(ms) < 2:
        raise ValueError("a growth fit needs at least two powers")
    reps = gg_power_series(iso, q, n, samples, k, ms, seed, tol=tol)
    fit = linear_fit(ms, [r.estimate for r in reps])
    x = np.asarray(ms, dtype=float)
    xc = x - x.mean()
    per_sample = sum(xc[i] * reps[i].values for i in range(len(ms))) / float((xc**2).sum())
    fit["slope_std_error"] = float(per_sample.std(ddof=1) / math.sqrt(len(per_sample)))
    last, M = reps[-1], ms[-1]
    constants = dict(last.constants_used)
    if "homogenization_error" in constants:
        constants["homogenization_error"] /= M
    homogenized = EstimateReport(last.estimate / M, last.samples, last.std_error / M, k * M, seed,
                                 constants, last.rejected_samples, last.rejection_reasons,
                                 f"{q.name}[{iso.name}] homogenized", last.config_hash,
                                 None if last.values is None else last.values / M)
    return {"reports": reps, "fit": fit, "homogenized": homogenized}


# --- estimator objects ------------------------------------------------------------------

class GGEstimator(BaseEstimator):
    """Homogenized braid quasimorphism of a flow; ``fit`` stores ``report_``."""

    def __init__(self, quasimorphism="lk12", n=2, samples=1000, k=32, seed=0, duration=1.0,
                 basepoints=None):
        self.quasimorphism = quasimorphism
        self.n = n
        self.samples = samples
        self.k = k
        self.seed = seed
        self.duration = duration
        self.basepoints = basepoints

    def _q(self) -> Quasimorphism:
        q = self.quasimorphism
        return resolve_quasimorphism(q, self.n) if isinstance(q, str) else q

    def fit(self, isotopy, y=None):
        self.report_ = gg_homogenized(isotopy, self._q(), self.n, self.samples, self.k, self.seed,
                                      self.duration, self.basepoints)
        self.estimate_ = self.report_.estimate
        return self


class PolterovichEstimator(BaseEstimator):
    """Homogenized loop quasimorphism of a flow on the octagon."""

    def __init__(self, quasimorphism="surface-brooks:1,2", samples=1000, k=32, seed=0,
                 duration=1.0):
        self.quasimorphism = quasimorphism
        self.samples = samples
        self.k = k
        self.seed = seed
        self.duration = duration

    def fit(self, isotopy, y=None):
        q = self.quasimorphism
        q = resolve_quasimorphism(q) if isinstance(q, str) else q
        self.report_ = polterovich_estimate(isotopy, q, self.samples, self.k, self.seed,
                                            self.duration)
        self.estimate_ = self.report_.estimate
        return self
