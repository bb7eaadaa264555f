"""Command-line front end: run experiments from flat config files and dump words.

Exit codes: 0 success, 2 a numerical gate failed or a report was flagged for
excessive rejections, 3 the configuration (or an input file) is invalid.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .braids import HandleBudgetExceeded, braid, handle_reduce, spherical_normalize
from .estimators import (
    ExcessiveRejection,
    EstimateReport,
    NotRegular,
    calabi_direct,
    config_hash,
    continuity_experiment,
    decomposition_verify,
    distance_lower_bound,
    gg_homogenized,
    gg_power_series,
    growth_experiment,
    level_vanishing_qm,
    lipschitz_ratio_probe,
    polterovich_estimate,
    regular_points,
    resolve_quasimorphism,
)
from .flow_sim import (
    CATALOG_NAMES,
    DEFAULT_TOLERANCES,
    SURFACES,
    EnergyGateError,
    ExpressionField,
    GridField,
    HamiltonianSystem,
    Isotopy,
    Tolerances,
    autonomous,
    catalog_entry,
    disc_rotation,
    eggbeater_isotopy,
    make_surface,
)
from .quasimorphisms.surface import dehn_reduce
from .tracing import ConfigurationSample, TracingError, events_csv, trace_braid, trace_loop_class
from .words import GroupWord, format_word, parse_header

EXIT_OK, EXIT_GATE, EXIT_CONFIG = 0, 2, 3
EXPERIMENTS = ("gg", "polterovich", "calabi-check", "vanishing", "decomposition", "growth",
               "continuity", "lipschitz-probe")
EXTRA_FLOWS = ("disc_rotation", "eggbeater")
QUASIMORPHISM_NAMES = ("lk<i><j>", "expsum", "rademacher", "eta-vanishing", "level-vanishing",
                       "brooks:<pattern>", "surface-brooks:<pattern>", "combo:<file>")


class ConfigError(ValueError):
    pass


# --- config files ---------------------------------------------------------------

def read_config(path, _seen=None) -> dict[str, str]:
    """Flat ``key = value`` lines; ``include <file>`` splices another file in place.

    Later keys override earlier ones, include paths are relative to the
    including file, and ``#`` starts a comment.
    """
    path = Path(path)
    seen = set() if _seen is None else _seen
    key = path.resolve()
    if key in seen:
        raise ConfigError(f"include cycle through {path}")
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    seen = seen | {key}
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("include"):
            rest = line[len("include"):].strip().lstrip("=").strip()
            if rest:
                out.update(read_config(path.parent / rest, seen))
                continue
        name, eq, value = line.partition("=")
        if not eq or not name.strip():
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        out[name.strip()] = value.strip()
    return out


def _ints(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


@dataclass
class ExperimentConfig:
    """Every setting an experiment reads; the report records all of them."""

    experiment: str
    seed: int
    hamiltonian: list = field(default_factory=lambda: ["disc_radial_bump"])
    quasimorphism: str = ""  # empty: the experiment's documented default
    n: int = 2
    p: float = 2.0
    samples: int = 1000
    k: int = 32
    m: list = field(default_factory=lambda: [1])
    duration: float = 1.0
    deltas: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    points: int = 20
    base_duration: float = 1.0
    min_frequency: float = 0.0
    C: float = 0.0  # Lipschitz constant for certificates; 0 means none supplied
    factors: list = field(default_factory=lambda: [1])
    name: str = ""
    output: str = "."
    tolerances: dict = field(default_factory=dict)

    _PARSERS = {"seed": int, "n": int, "samples": int, "k": int, "points": int,
                "p": float, "duration": float, "base_duration": float, "min_frequency": float,
                "C": float, "m": _ints, "factors": _ints, "deltas": _floats,
                "hamiltonian": _names, "experiment": str, "quasimorphism": str, "name": str,
                "output": str}

    @classmethod
    def from_mapping(cls, raw: dict[str, str], base_dir: Path | None = None) -> "ExperimentConfig":
        if "seed" not in raw:
            raise ConfigError("config has no seed (there is no clock-based default)")
        if "experiment" not in raw:
            raise ConfigError("config has no experiment kind")
        kw: dict = {}
        tol: dict = {}
        tol_fields = {f.name: f.type for f in fields(Tolerances)}
        for key, value in raw.items():
            try:
                if key.startswith("tol."):
                    if key[4:] not in tol_fields:
                        raise ConfigError(f"unknown tolerance {key[4:]!r}")
                    tol[key[4:]] = float(value)
                elif key in cls._PARSERS:
                    kw[key] = cls._PARSERS[key](value)
                else:
                    raise ConfigError(f"unknown config key {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {key}: {value!r}") from None
        cfg = cls(tolerances=dict(sorted(tol.items())), **kw)
        if cfg.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not cfg.hamiltonian:
            raise ConfigError("no hamiltonian given")
        if base_dir is not None:
            cfg.hamiltonian = [h if _builtin_flow(h) else str((base_dir / h)) for h in cfg.hamiltonian]
            if cfg.quasimorphism.startswith("combo:"):
                cfg.quasimorphism = "combo:" + str(base_dir / cfg.quasimorphism[6:])
        for h in cfg.hamiltonian:
            if not _builtin_flow(h) and not Path(h).is_file():
                raise ConfigError(f"hamiltonian {h!r} is neither a built-in flow nor a file")
        if cfg.samples < 2 or cfg.k < 1 or cfg.points < 1 or not cfg.m or min(cfg.m) < 1:
            raise ConfigError("need samples >= 2, k >= 1, points >= 1 and m >= 1")
        return cfg

    @property
    def tol(self) -> Tolerances:
        return DEFAULT_TOLERANCES.with_overrides(**self.tolerances)

    def as_dict(self) -> dict:
        """Settings that determine the results (the output directory does not)."""
        d = asdict(self)
        d.pop("output")
        return dict(sorted(d.items()))


# --- flows -----------------------------------------------------------------------

@dataclass
class Flow:
    name: str
    system: HamiltonianSystem | None  # None for composite isotopies
    isotopy: Isotopy


def _builtin_flow(name: str) -> bool:
    return name in CATALOG_NAMES or name in EXTRA_FLOWS


def _check_collar(sys: HamiltonianSystem, tol: Tolerances) -> None:
    rng = np.random.default_rng(0)
    r = rng.uniform(1.0 - tol.collar, 1.0, 2000)
    a = rng.uniform(0.0, 2 * math.pi, 2000)
    pts = np.stack([r * np.cos(a), r * np.sin(a)], axis=1)
    if np.abs(sys.H.value(pts)).max() > 1e-12 or np.abs(sys.H.grad(pts)).max() > 1e-12:
        raise ConfigError(f"{sys.name}: a disc Hamiltonian must vanish for r > {1 - tol.collar}")


def load_hamiltonian_file(path, tol: Tolerances = DEFAULT_TOLERANCES, duration: float = 1.0) -> Flow:
    """Hamiltonian spec file: ``surface``, ``expression`` or ``grid``, and optionally
    ``name``, ``duration`` and ``dt``.

    Expressions use ``x, y`` (``x, y, z`` on the sphere), ``+ - * / ^`` and
    ``sin cos exp``; a grid file holds x nodes, y nodes, then one row per x.
    """
    path = Path(path)
    raw = read_config(path)
    unknown = set(raw) - {"surface", "expression", "grid", "name", "duration", "dt"}
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kind = raw.get("surface", "")
    if kind not in SURFACES:
        raise ConfigError(f"{path}: surface must be one of {sorted(SURFACES)}")
    if ("expression" in raw) == ("grid" in raw):
        raise ConfigError(f"{path}: give exactly one of expression, grid")
    try:
        if "expression" in raw:
            H = ExpressionField(raw["expression"], 3 if kind == "sphere" else 2)
        else:
            if kind == "sphere":
                raise ConfigError(f"{path}: grid Hamiltonians are planar")
            H = GridField.from_file(path.parent / raw["grid"])
        sys_ = HamiltonianSystem(make_surface(kind), H, raw.get("name", path.stem), kind == "disc")
        if kind == "disc":
            _check_collar(sys_, tol)
        dt = float(raw["dt"]) if "dt" in raw else None
        iso = autonomous(sys_, float(raw.get("duration", duration)), dt, tol)
    except ConfigError:
        raise
    except (ValueError, TypeError, SyntaxError, OSError, IndexError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return Flow(sys_.name, sys_, iso)


def resolve_flow(spec: str, tol: Tolerances = DEFAULT_TOLERANCES, duration: float = 1.0) -> Flow:
    if spec == "eggbeater":
        return Flow(spec, None, eggbeater_isotopy())
    if spec == "disc_rotation":
        sys_ = disc_rotation()
        return Flow(spec, sys_, autonomous(sys_, duration, tol=tol))
    if spec in CATALOG_NAMES:
        sys_ = catalog_entry(spec)
        return Flow(spec, sys_, autonomous(sys_, duration, tol=tol))
    return load_hamiltonian_file(spec, tol, duration)


def _system(flow: Flow, kind: str) -> HamiltonianSystem:
    if flow.system is None:
        raise ConfigError(f"{kind} needs an autonomous Hamiltonian, {flow.name} is a composite")
    return flow.system


# --- experiments ------------------------------------------------------------------

@dataclass
class Outcome:
    results: dict
    table: tuple[list, list]  # header, rows
    plot: tuple[str, str] | None = None  # x and y column labels; None plots the last column by row
    flagged: bool = False
    extra_tables: dict = field(default_factory=dict)


def _q(cfg: ExperimentConfig, default: str, n: int | None = None):
    try:
        return resolve_quasimorphism(cfg.quasimorphism or default, cfg.n if n is None else n)
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"quasimorphism: {exc}") from None


def _vanishing_bound(rep: EstimateReport) -> float:
    return 3 * rep.std_error + rep.homogenization_error


def _gg(cfg, flows):
    q = _q(cfg, "lk12")
    reps = gg_power_series(flows[0].isotopy, q, cfg.n, cfg.samples, cfg.k, cfg.m, cfg.seed, tol=cfg.tol)
    rows = [[m, r.estimate, r.std_error, r.homogenization_error] for m, r in zip(cfg.m, reps)]
    return Outcome({"reports": [r.to_dict() for r in reps]},
                   (["m", "estimate", "std_error", "homogenization_error"], rows), ("m", "estimate"),
                   any(r.flagged for r in reps))


def _polterovich(cfg, flows):
    flow = flows[0]
    q = level_vanishing_qm(_system(flow, "level-vanishing"), cfg.seed) \
        if cfg.quasimorphism in ("", "level-vanishing") else _q(cfg, "")
    rep = polterovich_estimate(flow.isotopy, q, cfg.samples, cfg.k, cfg.seed, tol=cfg.tol)
    return Outcome({"report": rep.to_dict(), "quasimorphism": q.name},
                   (["flow", "estimate", "std_error", "homogenization_error"],
                    [[flow.name, rep.estimate, rep.std_error, rep.homogenization_error]]),
                   None, rep.flagged)


def _calabi_check(cfg, flows):
    q = _q(cfg, "lk12", 2)
    rows, reps = [], []
    for flow in flows:
        sys_ = _system(flow, "calabi-check")
        rep = gg_homogenized(sys_, q, 2, cfg.samples, cfg.k, cfg.seed, cfg.duration, tol=cfg.tol)
        cal = calabi_direct(sys_, cfg.duration)
        rows.append([flow.name, rep.estimate, rep.std_error, cal, rep.estimate / cal])
        reps.append(rep)
    ratios = [r[4] for r in rows]
    mean = math.fsum(ratios) / len(ratios)
    spread = max(abs(r - mean) for r in ratios) / abs(mean) if mean else math.inf
    print(f"calabi-check: mean ratio {mean:.6g}, max relative deviation {spread:.3%}", file=sys.stderr)
    return Outcome({"reports": [r.to_dict() for r in reps], "mean_ratio": mean,
                    "max_relative_deviation": spread},
                   (["flow", "estimate", "std_error", "calabi", "ratio"], rows), None,
                   any(r.flagged for r in reps))


def _decomposition_rows(decs) -> list:
    return [[i, r.k, r.m, r.remainder] for i, d in enumerate(decs) for r in d.rows]


def _decomposition_summary(decs, K) -> list:
    return [{"point": list(d.point), "anchor": list(d.anchor), "period": d.period,
             "frequency": d.frequency, "level_word": list(d.level_word),
             "max_remainder": d.max_remainder, "m_over_k": d.rows[-1].m / K} for d in decs]


def _decompose(cfg, sys_):
    max_period = cfg.base_duration / cfg.min_frequency if cfg.min_frequency > 0 else None
    pts, ch = regular_points(sys_, cfg.points, cfg.seed, max_period=max_period, tol=cfg.tol)
    return decomposition_verify(sys_, pts, cfg.k, cfg.base_duration, ch,
                                min_frequency=cfg.min_frequency, tol=cfg.tol)


def _vanishing(cfg, flows):
    rows, results, flagged, extra = [], [], False, {}
    for flow in flows:
        kind = flow.isotopy.surface.kind
        if kind == "sphere":
            # no vanishing quasimorphism is available on spherical braids; check the
            # decomposition of the traced braids into level-word powers instead
            decs = _decompose(cfg, _system(flow, "vanishing"))
            extra[f"{flow.name}_decomposition"] = (["point", "k", "m", "remainder"], _decomposition_rows(decs))
            worst = max(d.max_remainder for d in decs)
            rows.append([flow.name, "", "", "", "", worst])
            results.append({"flow": flow.name, "decomposition": _decomposition_summary(decs, cfg.k)})
            continue
        if kind == "disc":
            q = _q(cfg, "eta-vanishing", 3)
            rep = gg_homogenized(flow.isotopy, q, 3, cfg.samples, cfg.k, cfg.seed, tol=cfg.tol)
        else:
            q = level_vanishing_qm(_system(flow, "vanishing"), cfg.seed) \
                if cfg.quasimorphism in ("", "level-vanishing") else _q(cfg, "")
            rep = polterovich_estimate(flow.isotopy, q, cfg.samples, cfg.k, cfg.seed, tol=cfg.tol)
        bound = _vanishing_bound(rep)
        ok = abs(rep.estimate) <= bound
        flagged |= rep.flagged
        rows.append([flow.name, rep.estimate, rep.std_error, bound, int(ok), ""])
        results.append({"flow": flow.name, "quasimorphism": q.name, "report": rep.to_dict(),
                        "bound": bound, "vanishes": ok})
    return Outcome({"flows": results},
                   (["flow", "estimate", "std_error", "bound", "vanishes", "max_remainder"], rows),
                   None, flagged, extra)


def _decomposition(cfg, flows):
    decs = _decompose(cfg, _system(flows[0], "decomposition"))
    return Outcome({"points": _decomposition_summary(decs, cfg.k)},
                   (["point", "k", "m", "remainder"], _decomposition_rows(decs)), ("k", "m"))


def _growth(cfg, flows):
    q = _q(cfg, "eta-vanishing", 3 if not cfg.quasimorphism else None)
    n = q.domain.param if q.domain.kind == "artin_braid" else cfg.n
    g = growth_experiment(flows[0].isotopy, q, n, cfg.samples, cfg.k, cfg.m, cfg.seed, tol=cfg.tol)
    reps = g["reports"]
    rows = [[m, r.estimate, r.std_error] for m, r in zip(cfg.m, reps)]
    results = {"reports": [r.to_dict() for r in reps], "fit": g["fit"]}
    certs = []
    if cfg.C > 0:
        base = g["homogenized"]
        for factors in cfg.factors:
            for m in cfg.m:
                cert = distance_lower_bound(base, q.defect_bound, cfg.C, m, factors)
                certs.append(cert.to_dict())
                if factors == cfg.factors[0]:
                    rows[cfg.m.index(m)].append(cert.bound)
        results["certificates"] = certs
        results["homogenized"] = base.to_dict()
    header = ["m", "estimate", "std_error"] + (["bound"] if cfg.C > 0 else [])
    return Outcome(results, (header, rows), ("m", "estimate"), any(r.flagged for r in reps))


def _continuity(cfg, flows):
    q = _q(cfg, "lk12")
    base, table = continuity_experiment(_system(flows[0], "continuity"), cfg.deltas, q, cfg.n,
                                        cfg.samples, cfg.k, cfg.seed, duration=cfg.duration, tol=cfg.tol)
    rows = [[r.delta, r.difference, r.std_error, r.estimate] for r in table]
    return Outcome({"base": base.to_dict(), "rows": [asdict(r) for r in table]},
                   (["delta", "difference", "std_error", "estimate"], rows), ("delta", "difference"),
                   base.flagged)


def _lipschitz(cfg, flows):
    q = _q(cfg, "lk12")
    best, table = lipschitz_ratio_probe([f.isotopy for f in flows], q, cfg.n, cfg.p, cfg.samples,
                                        cfg.seed, cfg.k, tol=cfg.tol)
    rows = [[r.name, r.estimate, r.std_error, r.length, r.ratio] for r in table]
    return Outcome({"max_ratio": best, "rows": [asdict(r) for r in table]},
                   (["flow", "estimate", "std_error", "length", "ratio"], rows))


RUNNERS = {"gg": _gg, "polterovich": _polterovich, "calabi-check": _calabi_check,
           "vanishing": _vanishing, "decomposition": _decomposition, "growth": _growth,
           "continuity": _continuity, "lipschitz-probe": _lipschitz}


# --- output ----------------------------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _plot_script(csv_name: str, header: list, plot: tuple[str, str] | None, title: str) -> str:
    xlabel, ylabel = plot if plot else ("row", header[-1])
    x = header.index(xlabel) + 1 if plot else 0
    y = header.index(ylabel) + 1
    err = f":{header.index('std_error') + 1}" if "std_error" in header and ylabel == "estimate" else ""
    style = "yerrorbars" if err else "linespoints"
    return (f'set datafile separator ","\nset key off\nset title "{title}"\n'
            f'set xlabel "{xlabel}"\nset ylabel "{ylabel}"\n'
            f'plot "{csv_name}" every ::1 using {x}:{y}{err} with {style}\n')


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment and write ``<name>.json``, ``<name>.csv`` and ``<name>.plt``."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.name or cfg.experiment
    config = cfg.as_dict()
    report = {"experiment": cfg.experiment, "seed": cfg.seed, "config": config,
              "config_hash": config_hash(config)}
    try:
        flows = [resolve_flow(h, cfg.tol, cfg.duration) for h in cfg.hamiltonian]
        outcome = RUNNERS[cfg.experiment](cfg, flows)
    except (EnergyGateError, ExcessiveRejection, NotRegular, TracingError, HandleBudgetExceeded) as exc:
        report.update(status="gate_failure", error=f"{type(exc).__name__}: {exc}")
        (out / f"{name}.json").write_text(_dump(report))
        print(f"gate failure: {exc}", file=sys.stderr)
        return EXIT_GATE
    header, rows = outcome.table
    artifacts = [f"{name}.json", f"{name}.csv", f"{name}.plt"]
    (out / f"{name}.csv").write_text(_csv_text(header, rows))
    for suffix, (h, r) in sorted(outcome.extra_tables.items()):
        (out / f"{name}_{suffix}.csv").write_text(_csv_text(h, r))
        artifacts.append(f"{name}_{suffix}.csv")
    (out / f"{name}.plt").write_text(_plot_script(f"{name}.csv", header, outcome.plot, name))
    report.update(status="flagged" if outcome.flagged else "ok", results=outcome.results,
                  artifacts=sorted(artifacts))
    (out / f"{name}.json").write_text(_dump(report))
    if outcome.flagged:
        print("report flagged: too many rejected samples", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def list_registry() -> str:
    lines = ["surfaces:"] + [f"  {s}" for s in SURFACES]
    lines += ["flows:"] + [f"  {s}" for s in CATALOG_NAMES + EXTRA_FLOWS]
    lines += ["quasimorphisms:"] + [f"  {s}" for s in QUASIMORPHISM_NAMES]
    lines += ["experiments:"] + [f"  {s}" for s in EXPERIMENTS]
    return "\n".join(lines) + "\n"


# --- word utilities -----------------------------------------------------------------

def reduce_words(text: str) -> str:
    """Reduce every word block of ``text``.

    ``n=<strands> sphere=<0|1>`` headers give braids (handle reduction, plus
    removal of ``delta_n`` copies on the sphere); ``n=<letters> genus=<g>``
    headers give surface-group words (Dehn reduction).
    """
    out = []
    header = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            header = parse_header(line)
            continue
        if header is None:
            raise ValueError("word line before any header")
        letters = tuple(int(t) for t in line.split())
        if "genus" in header:
            w = dehn_reduce(GroupWord(header["n"], letters), header["genus"])
            out.append(format_word(w, f"n={header['n']} genus={header['genus']}"))
            continue
        b = handle_reduce(braid(header["n"], letters))
        if header.get("sphere", 0):
            b = spherical_normalize(b)
        out.append(format_word(b.word, b.header()))
    return "".join(out)


def _parse_points(text: str) -> np.ndarray:
    try:
        pts = [[float(v) for v in p.split(",")] for p in text.split(";") if p.strip()]
        arr = np.array(pts, dtype=float)
    except ValueError:
        raise ConfigError(f"bad points {text!r}; use x,y;x,y") from None
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigError("points need two coordinates each")
    return arr


def trace_command(args) -> int:
    flow = resolve_flow(args.hamiltonian or args.flow, DEFAULT_TOLERANCES, args.duration)
    pts = _parse_points(args.points)
    charts = None if args.charts is None else np.array(_ints(args.charts), np.int8)
    if flow.isotopy.surface.kind == "polygon_genus2":
        if len(pts) != 1:
            raise ConfigError("loop classes are traced one point at a time")
        sys.stdout.write(format_word(trace_loop_class(flow.isotopy, pts[0])))
        return EXIT_OK
    w, events = trace_braid(flow.isotopy, ConfigurationSample(pts, charts), keep_events=True)
    if args.events:
        Path(args.events).write_text(events_csv(events))
    sys.stdout.write(format_word(w.word, w.header()))
    return EXIT_OK


# --- entry point -----------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are configuration errors, not gate failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="braidflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("run", help="run an experiment config")
    p.add_argument("config")
    p.add_argument("--output", help="directory for the report (overrides the config)")
    p.add_argument("--hamiltonian", help="Hamiltonian spec file or flow name (overrides the config)")
    sub.add_parser("list", help="list surfaces, flows, quasimorphisms and experiments")
    sub.add_parser("reduce-word", help="reduce words read from stdin")
    t = sub.add_parser("trace", help="trace one configuration and print its word")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--flow", help="catalog flow name")
    src.add_argument("--hamiltonian", help="Hamiltonian spec file")
    t.add_argument("--points", required=True,
                   help="x,y;x,y;... in chart coordinates (write --points=... when x < 0)")
    t.add_argument("--charts", help="chart per point on the sphere, e.g. 0,0")
    t.add_argument("--duration", type=float, default=1.0)
    t.add_argument("--events", help="write crossing events to this CSV file")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            sys.stdout.write(list_registry())
            return EXIT_OK
        if args.command == "reduce-word":
            try:
                sys.stdout.write(reduce_words(sys.stdin.read()))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            except HandleBudgetExceeded as exc:
                sys.stdout.write(format_word(exc.partial.word, exc.partial.header()))
                print(str(exc), file=sys.stderr)
                return EXIT_GATE
            return EXIT_OK
        if args.command == "trace":
            try:
                return trace_command(args)
            except (EnergyGateError, TracingError) as exc:
                print(f"gate failure: {exc}", file=sys.stderr)
                return EXIT_GATE
        raw = read_config(args.config)
        cfg = ExperimentConfig.from_mapping(raw, Path(args.config).parent)
        if args.hamiltonian:
            if not _builtin_flow(args.hamiltonian) and not Path(args.hamiltonian).is_file():
                raise ConfigError(f"hamiltonian file {args.hamiltonian} not found")
            cfg.hamiltonian = [args.hamiltonian]
        if args.output:
            cfg.output = args.output
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
