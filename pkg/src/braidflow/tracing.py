"""From trajectories to group words.

Braids: strands are projected to the first coordinate of the tracing chart
(the disc itself, or the sphere chart projecting from the south pole).  Each
sign change of ``x_a - x_b`` between consecutive samples is a crossing,
located by linear interpolation; it swaps two adjacent strands and emits
``sigma_i`` (the left one of the two positions), positive when the strand
moving right passes below the other.  Straight connectors from the
basepoints to the sample and back are traced the same way.

Loops on the octagon: each exit through edge ``e`` emits ``EDGE_LETTER[e]``;
connectors stay inside the fundamental domain and emit nothing.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .braids import BraidWord, SphericalBraidWord
from .flow_sim.config import DEFAULT_TOLERANCES, Tolerances
from .flow_sim.dynamics import Isotopy, iterate_flow
from .flow_sim.surfaces import EDGE_LETTER, to_tracing_chart
from .quasimorphisms.surface import dehn_reduce
from .words import GroupWord, _reduce_letters


class TracingError(ValueError):
    """The sample cannot be traced unambiguously; draw another one."""


# reasons a sample is rejected
COLLISION = "collision"
TIE = "tie"
POLE = "pole"
CORNER = "corner"


@dataclass(frozen=True)
class ConfigurationSample:
    """``n`` points in chart coordinates and the basepoints they are joined to.

    Basepoints are given in tracing-chart coordinates; ``None`` means the
    initial points themselves.
    """

    points: np.ndarray
    charts: np.ndarray | None = None
    basepoints: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.points)


@dataclass
class CrossingEvent:
    time: float
    pair: tuple[int, int]  # strands, 0-based
    generator: int  # signed Artin letter

    @property
    def sign(self) -> int:
        return 1 if self.generator > 0 else -1


@dataclass
class BatchTrace:
    """Words for a batch of samples, one list per checkpoint."""

    words: list  # words[c][s]: BraidWord / GroupWord, or None when rejected
    rejected: np.ndarray  # per-sample reason code, "" when fine
    events: list | None = None  # per sample, for the final checkpoint

    @property
    def ok(self) -> np.ndarray:
        return self.rejected == ""


# --- crossing detection ---------------------------------------------------------

@dataclass
class _Events:
    sample: list = field(default_factory=list)
    time: list = field(default_factory=list)
    a: list = field(default_factory=list)
    b: list = field(default_factory=list)
    eps: list = field(default_factory=list)

    def extend(self, other: "_Events") -> None:
        for name in ("sample", "time", "a", "b", "eps"):
            getattr(self, name).extend(getattr(other, name))


def _segment_events(p0: np.ndarray, p1: np.ndarray, t0: float, t1: float,
                    pairs: np.ndarray, tol: Tolerances, bad: np.ndarray) -> _Events:
    """Crossings of strands moving linearly from ``p0`` to ``p1`` (shape ``(S, n, 2)``)."""
    ia, ib = pairs[:, 0], pairs[:, 1]
    d0 = p0[:, ia, 0] - p0[:, ib, 0]
    d1 = p1[:, ia, 0] - p1[:, ib, 0]
    flip = (d0 > 0) != (d1 > 0)
    out = _Events()
    if not flip.any():
        return out
    s, k = np.nonzero(flip)
    a, b = ia[k], ib[k]
    den = d0[s, k] - d1[s, k]
    lam = np.where(den != 0, d0[s, k] / np.where(den != 0, den, 1.0), 0.5)
    y0 = p0[s, a, 1] - p0[s, b, 1]
    y1 = p1[s, a, 1] - p1[s, b, 1]
    dy = (1 - lam) * y0 + lam * y1
    bad[s[np.abs(dy) < tol.collision_tol]] = True
    a_left = d0[s, k] <= 0
    # the left strand moves right; positive when it passes below
    below = np.where(a_left, dy < 0, dy > 0)
    out.sample = s.tolist()
    out.time = (t0 + lam * (t1 - t0)).tolist()
    out.a = a.tolist()
    out.b = b.tolist()
    out.eps = np.where(below, 1, -1).tolist()
    return out


def _words_from_events(start: np.ndarray, ev: _Events, tie_tol: float, bad: np.ndarray,
                       keep_events: bool = False):
    """Per-sample letter tuples from accumulated crossings."""
    S, n = start.shape[:2]
    per: list[list[int]] = [[] for _ in range(S)]
    for idx in np.argsort(np.asarray(ev.time), kind="stable"):
        per[ev.sample[idx]].append(int(idx))
    letters_out = []
    events_out = [] if keep_events else None
    for s in range(S):
        order = [int(i) for i in np.argsort(start[s, :, 0], kind="stable")]
        pos = [0] * n
        for p, strand in enumerate(order):
            pos[strand] = p
        letters = []
        recs = []
        idxs = per[s]
        for j, e in enumerate(idxs):
            a, b, t = ev.a[e], ev.b[e], ev.time[e]
            # crossings sharing a strand at (almost) the same instant are ambiguous
            for e2 in idxs[j + 1:]:
                if ev.time[e2] - t >= tie_tol:
                    break
                if {a, b} & {ev.a[e2], ev.b[e2]}:
                    bad[s] = True
            i, k = pos[a], pos[b]
            if abs(i - k) != 1:
                bad[s] = True
                break
            lo = min(i, k)
            letter = ev.eps[e] * (lo + 1)
            letters.append(letter)
            if keep_events:
                recs.append(CrossingEvent(t, (a, b), letter))
            order[i], order[k] = order[k], order[i]
            pos[a], pos[b] = k, i
        letters_out.append(letters)
        if keep_events:
            events_out.append(recs)
    return letters_out, events_out


def _pole_distance(u: np.ndarray) -> np.ndarray:
    return 2.0 / np.sqrt(1.0 + np.einsum("...i,...i->...", u, u))


def default_basepoints(n: int) -> np.ndarray:
    """Fixed basepoints on a horizontal segment through the origin."""
    if n == 1:
        return np.zeros((1, 2))
    xs = np.linspace(-0.5, 0.5, n)
    return np.stack([xs, np.full(n, 0.013)], axis=1)


def trace_braids(iso: Isotopy, points, charts=None, basepoints=None,
                 tol: Tolerances = DEFAULT_TOLERANCES, checkpoints: Sequence[int] | None = None,
                 keep_events: bool = False, check_energy: bool = True) -> BatchTrace:
    """Trace a batch of ``S`` configurations of ``n`` points through ``iso``.

    ``points`` has shape ``(S, n, 2)`` in chart coordinates.  ``checkpoints``
    are step counts (default: only the final step) at which the loop is closed
    by the return connector, giving one word per checkpoint and sample.
    """
    surface = iso.surface
    if surface.kind not in ("disc", "sphere"):
        raise ValueError("braid tracing needs the disc or the sphere")
    pts = np.array(points, dtype=float)
    if pts.ndim == 2:
        pts = pts[None]
    S, n = pts.shape[:2]
    ch = np.zeros((S, n), dtype=np.int8) if charts is None else np.array(charts, dtype=np.int8).reshape(S, n)
    sphere = surface.kind == "sphere"
    trace0 = to_tracing_chart(pts.reshape(-1, 2), ch.ravel()).reshape(S, n, 2) if sphere else pts.copy()
    if basepoints is None:
        z = trace0.copy()
    else:
        z = np.broadcast_to(np.asarray(basepoints, dtype=float), (S, n, 2)).copy()
    steps = iso.steps
    checkpoints = sorted(set(checkpoints or [steps]))
    if checkpoints[0] < 0 or checkpoints[-1] > steps:
        raise ValueError("checkpoints outside the isotopy")
    pairs = np.array(list(combinations(range(n), 2)), dtype=int).reshape(-1, 2)
    # the flow is a diffeomorphism, so only the start can put two strands together
    gaps = np.linalg.norm(pts[:, pairs[:, 0]] - pts[:, pairs[:, 1]], axis=-1)
    same_chart = ch[:, pairs[:, 0]] == ch[:, pairs[:, 1]]
    collide = ((gaps < tol.collision_tol) & same_chart).any(axis=1)
    tie = np.zeros(S, dtype=bool)
    pole = np.zeros(S, dtype=bool)
    dt = iso.dt
    tie_tol = tol.event_tol_factor * dt if dt > 0 else tol.event_tol_factor

    events = _segment_events(z, trace0, -1.0, 0.0, pairs, tol, collide)
    closed = []

    def close(cur: np.ndarray, t: float) -> None:
        both = _Events()
        both.extend(events)
        both.extend(_segment_events(cur, z, t, t + 1.0, pairs, tol, collide))
        closed.append(both)

    if checkpoints[0] == 0:
        close(trace0, 0.0)
    if steps:
        prev = trace0
        seg_end = np.cumsum([seg.steps for seg in iso.segments])
        seg_dt = [seg.dt for seg in iso.segments]
        t = 0.0
        for step, pos, chart, _ in iterate_flow(iso, pts.reshape(-1, 2), ch.ravel(), tol,
                                                energy_every=64, check_energy=check_energy):
            t_prev = t
            t += seg_dt[int(np.searchsorted(seg_end, step - 1, side="right"))]
            cur = (to_tracing_chart(pos, chart) if sphere else pos.copy()).reshape(S, n, 2)
            if sphere:
                pole |= (_pole_distance(cur) < tol.pole_tol).any(axis=1)
            events.extend(_segment_events(prev, cur, t_prev, t, pairs, tol, collide))
            prev = cur
            if step in checkpoints:
                close(cur, t)
    cls = SphericalBraidWord if sphere else BraidWord
    words = []
    last_events = None
    for c, ev in enumerate(closed):
        keep = keep_events and c == len(closed) - 1
        letters, recs = _words_from_events(z, ev, tie_tol, tie, keep)
        if keep:
            last_events = recs
        words.append([cls(n, GroupWord(n - 1, _reduce_letters(w))) for w in letters])
    rejected = np.full(S, "", dtype=object)
    rejected[tie] = TIE
    rejected[collide] = COLLISION
    rejected[pole] = POLE
    for c in range(len(words)):
        words[c] = [w if rejected[s] == "" else None for s, w in enumerate(words[c])]
    return BatchTrace(words, rejected, last_events)


def trace_braid(iso: Isotopy, x: ConfigurationSample, tol: Tolerances = DEFAULT_TOLERANCES,
                keep_events: bool = False):
    """Braid word of one configuration; raises :class:`TracingError` when ambiguous.

    With ``keep_events`` the crossing events are returned too.
    """
    res = trace_braids(iso, x.points[None], None if x.charts is None else x.charts[None],
                       x.basepoints, tol, keep_events=keep_events)
    if res.rejected[0]:
        raise TracingError(f"sample rejected: {res.rejected[0]}")
    w = res.words[-1][0]
    return (w, res.events[0]) if keep_events else w


def events_csv(events: Sequence[CrossingEvent]) -> str:
    """Crossing events as CSV: ``time,strand_a,strand_b,sign,generator``."""
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["time", "strand_a", "strand_b", "sign", "generator"])
    for e in events:
        out.writerow([repr(float(e.time)), e.pair[0] + 1, e.pair[1] + 1, e.sign, e.generator])
    return buf.getvalue()


# --- loops on the octagon ---------------------------------------------------------

def trace_loop_classes(iso: Isotopy, points, tol: Tolerances = DEFAULT_TOLERANCES,
                       checkpoints: Sequence[int] | None = None, genus: int = 2,
                       check_energy: bool = True) -> BatchTrace:
    """Dehn-reduced loop classes of many points of the octagon.

    The basepoint and both connectors lie inside the fundamental domain, so
    only the edge exits of the trajectory contribute letters.
    """
    if iso.surface.kind != "polygon_genus2":
        raise ValueError("loop classes are traced on the octagon")
    pts = np.array(points, dtype=float).reshape(-1, 2)
    S = len(pts)
    steps = iso.steps
    checkpoints = sorted(set(checkpoints or [steps]))
    letters: list[list[int]] = [[] for _ in range(S)]
    corner = np.zeros(S, dtype=bool)
    snaps = []
    if checkpoints[0] == 0:
        snaps.append([() for _ in range(S)])
    if steps:
        for step, _, _, ev in iterate_flow(iso, pts, None, tol, energy_every=64,
                                           check_energy=check_energy):
            for j, e in ev.exits:
                letters[j].append(EDGE_LETTER[e])
            if ev.corner_hits is not None:
                corner |= ev.corner_hits
            if step in checkpoints:
                snaps.append([tuple(w) for w in letters])
    size = 2 * genus
    words = [[None if corner[s] else dehn_reduce(GroupWord(size, w[s]), genus) for s in range(S)]
             for w in snaps]
    rejected = np.where(corner, CORNER, "").astype(object)
    return BatchTrace(words, rejected)


def trace_loop_class(iso: Isotopy, x, z=None, tol: Tolerances = DEFAULT_TOLERANCES) -> GroupWord:
    """Loop class in the genus-2 surface group of the orbit of ``x``.

    ``z`` is accepted for symmetry with the braid tracer; every basepoint in
    the open octagon gives the same word because connectors stay inside it.
    """
    res = trace_loop_classes(iso, np.asarray(x, dtype=float)[None], tol)
    if res.rejected[0]:
        raise TracingError("trajectory passes too close to an octagon corner")
    return res.words[-1][0]


# --- winding decomposition ----------------------------------------------------

def _longest_run(h: tuple, u: tuple) -> tuple[int, int]:
    """Longest run of consecutive copies of ``u`` inside ``h``: ``(copies, start)``."""
    n, m = len(h), len(u)
    if m == 0 or n < m:
        return 0, 0
    hit = [h[i:i + m] == u for i in range(n - m + 1)]
    run = [0] * (n + 1)
    best, where = 0, 0
    for i in range(n - m, -1, -1):
        if hit[i]:
            run[i] = 1 + (run[i + m] if i + m <= n else 0)
            if run[i] >= best:
                best, where = run[i], i
    return best, where


def winding_decomposition(h_word: GroupWord, level_word: GroupWord) -> tuple[int, int]:
    """Split ``h_word = a . level^m . b`` with ``|m|`` largest; return ``(m, len(a) + len(b))``.

    Copies of any cyclic rotation of the level word (or of its inverse) are
    accepted, since rotations only change the outer pieces by a conjugator.
    """
    L = tuple(_reduce_letters(level_word.letters))
    if not L:
        raise ValueError("level word must be nontrivial")
    h = tuple(h_word.letters)
    best_m, best_sign = 0, 1
    inv = tuple(-x for x in reversed(L))
    for sign, base in ((1, L), (-1, inv)):
        for r in range(len(base)):
            m, _ = _longest_run(h, base[r:] + base[:r])
            if m > best_m:
                best_m, best_sign = m, sign
    return best_sign * best_m, len(h) - best_m * len(L)
