"""Command-line front end.

Every subcommand resolves a :class:`RunConfig` (dataclass defaults, then the
``PERCOLAB_SEED`` environment variable, then ``--config FILE``, then flags),
runs, and writes one JSON report.  Exit status: 0 on success, 1 on invalid
input or I/O failure, 2 when ``--strict`` is set and some verdict is
inconclusive.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import analysis, oracle
from .core import PROXY_NOTE, TRUNCATED, TWO_POINT, EVENT_KINDS
from .estimators import (CSV_COLUMNS, OZ_CORRECTED, PURE_EXPONENTIAL, PairedCurve, default_window,
                         estimate_curve, estimate_xi, read_curve_csv, sweep_estimate)
from .lattice import BoxSpec, LatticeGraph, box_graph, build_box
from .reports import dumps, make_report

SUBCOMMANDS = ("exact", "tau", "tau-trunc", "sweep", "fit-oz", "check-bounds", "ratio",
               "mono-check", "mono-scan")
SEED_ENV = "PERCOLAB_SEED"


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    subcommand: str
    d: int = 2
    n_max: int | None = None
    margin: int = 10
    box: list | None = None
    p: float | None = None
    p_grid: list | None = None
    n_list: list | None = None
    event_kind: str = TWO_POINT
    samples: int = 100_000
    sweeps: int = 1000
    seed: int = 0
    workers: int = 1
    z: float = 3.0
    level: float = 0.95
    C1: float | None = None
    C2: float | None = None
    C: float | None = None
    bound_kind: str = analysis.LEMMA2
    form: str = analysis.LEMMA1
    model: str = OZ_CORRECTED
    source: str = "mc"
    input: str | None = None
    cap: int = oracle.DEFAULT_CAP
    output: str | None = None
    csv: str | None = None
    strict: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        return cls(**data)

    @property
    def n_values(self) -> list[int]:
        return list(self.n_list) if self.n_list else list(range(1, 9))

    def box_spec(self) -> BoxSpec:
        n_max = self.n_max if self.n_max is not None else max(self.n_values + [0])
        return BoxSpec(d=self.d, n_max=n_max, margin=self.margin)

    def graph(self) -> LatticeGraph:
        if self.box:
            return box_graph([tuple(b) for b in self.box])
        return build_box(self.box_spec())

    def bound_params(self) -> analysis.BoundParams:
        base = analysis.BoundParams.defaults(self.d)
        return analysis.BoundParams(C1=base.C1 if self.C1 is None else self.C1,
                                    C2=base.C2 if self.C2 is None else self.C2,
                                    C=base.C if self.C is None else self.C)


# ---------------------------------------------------------------------------
# parsing

def parse_int_list(text: str) -> list[int]:
    """``"1..8"``, ``"1,2,5"`` or a mix such as ``"0..3,6"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def parse_count(text) -> int:
    """Integer count, scientific notation allowed (``1e6``)."""
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not a whole number")
    return int(value)


def parse_box(text) -> list:
    """``"0:1,0:1"`` -> ``[[0, 1], [0, 1]]``."""
    if isinstance(text, list):
        return [[int(lo), int(hi)] for lo, hi in text]
    return [[int(x) for x in part.split(":")] for part in str(text).split(",")]


_CONVERTERS = {
    "d": int, "n_max": int, "margin": int, "box": parse_box, "p": float,
    "p_grid": lambda v: v if isinstance(v, list) else parse_float_list(v),
    "n_list": lambda v: v if isinstance(v, list) else parse_int_list(v),
    "samples": parse_count, "sweeps": parse_count, "seed": parse_count, "workers": int,
    "z": float, "level": float, "C1": float, "C2": float, "C": float, "cap": int,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("argv", message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    g.add_argument("--d", help="lattice dimension (integer, >= 2; 1 for path fixtures)")
    g.add_argument("--n-max", dest="n_max", help="largest axis distance covered by the box "
                   "(lattice units; default max of --n)")
    g.add_argument("--margin", help="extra lattice width on every side of the axis segment "
                   "(lattice units, default 10)")
    g.add_argument("--box", help="explicit box bounds LO:HI per axis, e.g. 0:1,0:1 (lattice units); "
                   "overrides --d/--n-max/--margin")
    g.add_argument("--p", help="bond occupation probability (dimensionless, in [0,1])")
    g.add_argument("--p-grid", dest="p_grid", help="comma-separated probabilities for sweep/mono-scan")
    g.add_argument("--n", dest="n_list", help="axis distances, e.g. 1..8 or 1,2,4 (lattice units)")
    g.add_argument("--event", dest="event_kind", choices=EVENT_KINDS,
                   help="event: two_point or truncated (finite-cluster proxy)")
    g.add_argument("--samples", help="Monte Carlo configurations (count; 1e6 accepted)")
    g.add_argument("--sweeps", help="bond-addition sweeps for the sweep estimator (count)")
    g.add_argument("--seed", help=f"64-bit seed (default from ${SEED_ENV}, else 0)")
    g.add_argument("--workers", help="worker threads (count; results do not depend on it)")
    g.add_argument("--z", help="significance multiplier (standard errors, default 3)")
    g.add_argument("--level", help="Wilson interval confidence level (fraction, default 0.95)")
    g.add_argument("--C1", help="lemma2 lower-bound constant (dimensionless, default 2d)")
    g.add_argument("--C2", help="lemma2 upper-bound constant (dimensionless, default 2d)")
    g.add_argument("--C", help="lemma4 upper-bound constant (dimensionless, default 8)")
    g.add_argument("--bound", dest="bound_kind", choices=analysis.BOUND_KINDS,
                   help="bound family for check-bounds")
    g.add_argument("--form", choices=analysis.OZ_FORMS, help="OZ fit form for fit-oz")
    g.add_argument("--model", choices=(PURE_EXPONENTIAL, OZ_CORRECTED),
                   help="correlation-length model used by ratio")
    g.add_argument("--source", choices=("mc", "exact"), help="curve source: Monte Carlo or exact enumeration")
    g.add_argument("--input", help="read the curve from a previous JSON report or a CSV file "
                   f"with columns {','.join(CSV_COLUMNS)}")
    g.add_argument("--cap", help="maximum bond count for exact enumeration (bonds; 2^cap configurations)")
    g.add_argument("--output", "-o", help="JSON report path (default stdout)")
    g.add_argument("--csv", help="also write the curve as CSV to this path")
    g.add_argument("--strict", action="store_true", help="exit 2 when any verdict is inconclusive")

    parser = _Parser(prog="percolab", description="Bond percolation two-point function laboratory.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "exact": "exact connectivity polynomials by enumeration",
        "tau": "Monte Carlo two-point curve with paired differences",
        "tau-trunc": "Monte Carlo truncated (finite-cluster proxy) curve",
        "sweep": "occupation-number sweep estimate over a p grid",
        "fit-oz": "Ornstein-Zernike fit of a curve",
        "check-bounds": "compare a curve against explicit bounds",
        "ratio": "successive-ratio diagnostic against the OZ prediction",
        "mono-check": "monotonicity verdicts for one p",
        "mono-scan": "monotonicity verdicts over a p grid",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], argument_default=argparse.SUPPRESS)
    return parser


def _load_config_file(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def parse_and_validate(argv, config_file: str | None = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    sub = args.pop("subcommand")
    values: dict = {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed:
        values["seed"] = env_seed
    path = args.pop("config", None) or config_file
    if path:
        values.update(_load_config_file(path))
    values.update(args)
    values.pop("subcommand", None)
    for name, raw in list(values.items()):
        conv = _CONVERTERS.get(name)
        if conv is not None and raw is not None:
            try:
                values[name] = conv(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(name, f"cannot parse {raw!r} ({exc})") from exc
    if sub == "tau-trunc":
        values["event_kind"] = TRUNCATED
    elif sub == "tau":
        values["event_kind"] = TWO_POINT
    cfg = RunConfig.from_dict({"subcommand": sub, **values})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.subcommand not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"unknown subcommand {cfg.subcommand!r}")
    if cfg.box:
        if any(len(b) != 2 or b[1] < b[0] for b in cfg.box):
            raise ConfigError("box", "each axis needs LO:HI with LO <= HI")
        cfg.d = len(cfg.box)
    if cfg.d < 1:
        raise ConfigError("d", f"must be >= 1, got {cfg.d}")
    if cfg.margin < 0:
        raise ConfigError("margin", "must be >= 0")
    if cfg.n_max is not None and cfg.n_max < 0:
        raise ConfigError("n_max", "must be >= 0")
    if cfg.p is not None and not 0.0 <= cfg.p <= 1.0:
        raise ConfigError("p", f"must lie in [0, 1], got {cfg.p}")
    for q in cfg.p_grid or []:
        if not 0.0 <= q <= 1.0:
            raise ConfigError("p_grid", f"every entry must lie in [0, 1], got {q}")
    if cfg.n_list is not None and (not cfg.n_list or min(cfg.n_list) < 0):
        raise ConfigError("n_list", "needs non-negative distances")
    if cfg.event_kind not in EVENT_KINDS:
        raise ConfigError("event_kind", f"must be one of {EVENT_KINDS}")
    for name in ("samples", "sweeps", "workers", "cap"):
        if getattr(cfg, name) < 1:
            raise ConfigError(name, "must be >= 1")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if cfg.z <= 0:
        raise ConfigError("z", "must be > 0")
    if not 0 < cfg.level < 1:
        raise ConfigError("level", "must lie in (0, 1)")
    for name in ("C1", "C2", "C"):
        v = getattr(cfg, name)
        if v is not None and not v > 0:
            raise ConfigError(name, "must be > 0")
    if cfg.source not in ("mc", "exact"):
        raise ConfigError("source", "must be mc or exact")

    sub = cfg.subcommand
    if sub == "check-bounds" and cfg.p is None:
        raise ConfigError("p", "check-bounds needs p to evaluate the bounds")
    needs_p = ("tau", "tau-trunc", "ratio", "mono-check", "fit-oz")
    if sub in needs_p and cfg.p is None and cfg.input is None:
        raise ConfigError("p", f"required by {sub}")
    if sub in ("sweep", "mono-scan") and not cfg.p_grid:
        raise ConfigError("p_grid", f"required by {sub}")
    if sub == "sweep" and cfg.event_kind == TRUNCATED:
        raise ConfigError("event_kind", "the truncated event is not increasing; sweeps refuse it")
    if sub == "check-bounds":
        try:
            analysis.check_bound_scope(cfg.bound_kind, cfg.d)
        except ValueError as exc:
            raise ConfigError("bound_kind", str(exc)) from exc
        if cfg.bound_kind == analysis.LEMMA2 and cfg.event_kind != TWO_POINT:
            raise ConfigError("event_kind", "lemma2 bounds concern the two-point event")
        if cfg.bound_kind != analysis.LEMMA2 and cfg.event_kind != TRUNCATED:
            raise ConfigError("event_kind", f"{cfg.bound_kind} bounds concern the truncated event")
    if sub == "fit-oz":
        try:
            analysis.oz_exponent(cfg.form, cfg.d)
        except ValueError as exc:
            raise ConfigError("form", str(exc)) from exc
    if cfg.box is not None and cfg.n_list is not None:
        graph_bounds = cfg.box[0]
        bad = [n for n in cfg.n_list if not graph_bounds[0] <= n <= graph_bounds[1]]
        if bad or any(not lo <= 0 <= hi for lo, hi in cfg.box):
            raise ConfigError("n_list", "the origin and every (n,0,...,0) must lie in the box")


# ---------------------------------------------------------------------------
# running

def _load_input_curve(cfg: RunConfig) -> PairedCurve:
    path = Path(cfg.input)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    if path.suffix.lower() == ".csv":
        pts = read_curve_csv(text)
        return PairedCurve.from_values(cfg.p if cfg.p is not None else float("nan"),
                                       [n for n, _, _ in pts], [v for _, v, _ in pts],
                                       [s for _, _, s in pts], event_kind=cfg.event_kind)
    data = json.loads(text)
    result = data.get("result", data)
    curve = result.get("curve", result)
    return PairedCurve.from_dict(curve)


def _curve(cfg: RunConfig, graph: LatticeGraph) -> PairedCurve:
    if cfg.input:
        return _load_input_curve(cfg)
    if cfg.source == "exact":
        values = oracle.exact_curve(graph, cfg.p, cfg.n_values, cfg.event_kind, cfg.cap, cfg.workers)
        curve = PairedCurve.from_values(cfg.p, [n for n, _ in values], [v for _, v in values],
                                        event_kind=cfg.event_kind)
        curve.graph = {"d": graph.d, "bounds": [list(b) for b in graph.bounds]}
        if cfg.event_kind == TRUNCATED:
            curve.notes.append(PROXY_NOTE)
        return curve
    return estimate_curve(graph, cfg.p, cfg.n_values, cfg.event_kind, cfg.samples, cfg.seed,
                          cfg.workers, cfg.level)


def trim_curve(curve: PairedCurve) -> PairedCurve:
    """Restrict to the longest run of points resolved above ten error bars."""
    lo, hi = default_window(curve.points())
    entries = [(n, e) for n, e in curve.entries if lo <= n <= hi]
    diffs = [d for d in curve.diffs if lo <= d.n and d.n_next <= hi]
    return PairedCurve(p=curve.p, entries=entries, diffs=diffs, event_kind=curve.event_kind,
                       seed=curve.seed, graph=curve.graph, notes=list(curve.notes))


def execute(cfg: RunConfig) -> tuple[dict, int, str | None]:
    """Run ``cfg``; returns (result dict, exit status, optional CSV text)."""
    graph = cfg.graph()
    sub = cfg.subcommand
    status, csv_text = 0, None
    if sub == "exact":
        polys = oracle.exact_polynomials(graph, cfg.n_values, cfg.event_kind, cfg.cap, cfg.workers)
        ps = cfg.p_grid or ([cfg.p] if cfg.p is not None else [])
        rows = [{"n": n, "polynomial": poly.to_dict(),
                 "values": [{"p": q, "value": oracle.eval_polynomial(poly, q)} for q in ps]}
                for n, poly in zip(cfg.n_values, polys)]
        return {"M": graph.bond_count, "event_kind": cfg.event_kind, "curves": rows}, 0, None
    if sub == "sweep":
        res = sweep_estimate(graph, cfg.n_values, cfg.p_grid, cfg.sweeps, cfg.seed, cfg.event_kind,
                             cfg.workers)
        curves = [{"p": q, "points": [{"n": n, "mean": m, "stderr": s} for n, m, s in res.curve(i)]}
                  for i, q in enumerate(res.p_grid)]
        return {"M": res.M, "sweeps": res.sweeps, "curves": curves}, 0, None
    if sub == "mono-scan":
        scan = analysis.scan_monotonicity(graph, cfg.event_kind, cfg.p_grid, cfg.n_values, cfg.samples,
                                          cfg.seed, cfg.z, cfg.workers)
        if cfg.strict and any(r.overall == analysis.INCONCLUSIVE for r in scan.reports):
            status = 2
        return scan.to_dict(), status, None

    curve = _curve(cfg, graph)
    result: dict = {"curve": curve.to_dict()}
    if sub in ("tau", "tau-trunc"):
        csv_text = curve.to_csv()
    elif sub == "fit-oz":
        fit = analysis.fit_oz(trim_curve(curve), cfg.d, cfg.form, cfg.z)
        result["fit"] = fit.to_dict()
    elif sub == "check-bounds":
        rep = analysis.check_bounds(curve, cfg.bound_kind, cfg.p, cfg.d, cfg.bound_params(), cfg.z)
        result["bounds"] = rep.to_dict()
        if cfg.strict and rep.summary[analysis.INCONCLUSIVE]:
            status = 2
    elif sub == "ratio":
        trimmed = trim_curve(curve)
        xi = estimate_xi(trimmed, cfg.d, cfg.model)
        rep = analysis.ratio_diagnostic(trimmed, xi, cfg.d, cfg.z)
        result["xi"] = xi.to_dict()
        result["ratio"] = rep.to_dict()
        if cfg.strict and not rep.all_greater_than_one and not rep.violations:
            status = 2
    elif sub == "mono-check":
        rep = analysis.check_monotone(curve, cfg.z)
        result["monotonicity"] = rep.to_dict()
        if cfg.strict and any(r["verdict"] == analysis.INCONCLUSIVE for r in rep.rows):
            status = 2
    return result, status, csv_text


def run(cfg: RunConfig, timestamp: bool = True) -> int:
    """Execute, write the report (and CSV), return the exit status."""
    try:
        result, status, csv_text = execute(cfg)
    except ValueError as exc:
        print(f"percolab: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"percolab: {exc}", file=sys.stderr)
        return 1
    notes = []
    if cfg.event_kind == TRUNCATED:
        notes.append(PROXY_NOTE)
    fixture = cfg.d == 1 or bool(cfg.box)
    report = make_report(cfg.subcommand, cfg.to_dict(), result, notes, fixture, timestamp)
    text = dumps(report)
    try:
        if cfg.output:
            Path(cfg.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        if cfg.csv and csv_text is not None:
            Path(cfg.csv).write_text(csv_text, encoding="utf-8")
    except OSError as exc:
        print(f"percolab: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return 1
    return status


def main(argv=None) -> int:
    try:
        cfg = parse_and_validate(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"percolab: invalid {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
