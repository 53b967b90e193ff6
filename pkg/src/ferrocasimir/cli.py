"""Command-line front end.

    python -m ferrocasimir curve --config run.json --format csv --out curve.csv

Exit codes: 0 success, 1 validation failure, 2 configuration or lookup
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import asymptotics
from .analysis import SweepAxis, find_equilibria, pressure_curve, sweep
from .constants import perfect_conductor_pressure
from .engine import ENGINE_VERSION, EngineConfig, EngineError, brute_force_pressure, casimir_pressure, mode_term
from .materials import (
    Constant,
    Drude,
    FerrofluidSpec,
    MaterialDB,
    MaterialError,
    MaterialRecord,
    default_db,
    eval_permittivity,
    ferrofluid_permittivity,
    load_material_db,
    ms_for_permeability,
)
from .stack import TE, TM, FourLayerStack

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

CURVE_COLUMNS = (
    "ell_nm", "p_te_n0_pa", "p_tm_n0_pa", "p_te_npos_pa", "p_tm_npos_pa", "p_total_pa", "p_normalized",
)
EQUILIBRIUM_COLUMNS = ("ell_star_nm", "kind", "bracket_lo_nm", "bracket_hi_nm", "residual_pa", "iterations")

DEFAULT_STACK = {
    "a": "polystyrene",
    "ferrofluid": {"solvent": "toluene", "particle": "magnetite", "phi": 0.05, "diameter_nm": 20.0},
    "coating": "teflon",
    "b1_nm": 10.0,
    "substrate": "gold",
}
DEFAULT_GRID = {"min": 10.0, "max": 1000.0, "count": 60, "spacing": "LOG"}
DEFAULT_XI_GRID = {"min": 0.01, "max": 100.0, "count": 41, "spacing": "LOG"}


class ConfigError(Exception):
    """Bad configuration or an unresolvable name (exit code 2)."""


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    min: float
    max: float
    count: int
    spacing: str = "LOG"

    def __post_init__(self) -> None:
        if self.count < 1:
            raise ConfigError("grid count must be >= 1")
        if self.spacing not in ("LIN", "LOG"):
            raise ConfigError(f"grid spacing must be LIN or LOG, got {self.spacing!r}")
        if self.count > 1 and not self.min < self.max:
            raise ConfigError("grid min must be below max")
        if self.spacing == "LOG" and self.min <= 0:
            raise ConfigError("a LOG grid needs min > 0")

    @classmethod
    def from_json(cls, obj: dict) -> "Grid":
        try:
            return cls(float(obj["min"]), float(obj["max"]), int(obj["count"]), str(obj.get("spacing", "LOG")).upper())
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid grid {obj!r}: {exc}") from None

    def points(self) -> list[float]:
        if self.count == 1:
            return [self.min]
        fn = np.geomspace if self.spacing == "LOG" else np.linspace
        return [float(x) for x in fn(self.min, self.max, self.count)]

    def to_json(self) -> dict:
        return {"min": self.min, "max": self.max, "count": self.count, "spacing": self.spacing}


@dataclass(frozen=True)
class RunConfig:
    db_path: str | None = None
    stack: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_STACK)))
    temperature_k: float = 300.0
    grid: Grid = Grid(**DEFAULT_GRID)
    engine: dict = field(default_factory=dict)
    fmt: str = "csv"
    out: str | None = None
    refine_tol_nm: float = 0.01
    sweep_axis: str | None = None
    sweep_values: tuple = ()
    material_names: tuple = ()
    xi_grid: Grid = Grid(**DEFAULT_XI_GRID)

    def engine_config(self) -> EngineConfig:
        try:
            return EngineConfig(temperature_k=self.temperature_k, **self.engine)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid engine settings: {exc}") from None

    def echo(self) -> dict:
        return {
            "stack": self.stack,
            "temperature_k": self.temperature_k,
            "grid": self.grid.to_json(),
            "engine": self.engine,
            "refine_tol_nm": self.refine_tol_nm,
        }


_CONFIG_KEYS = {
    "db", "stack", "temperature_k", "grid", "engine", "format", "out", "refine_tol_nm", "sweep", "materials",
}


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(obj) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kw: dict = {}
    if "db" in obj:
        kw["db_path"] = str(obj["db"])
    if "stack" in obj:
        stack = json.loads(json.dumps(DEFAULT_STACK))
        given = obj["stack"]
        if not isinstance(given, dict):
            raise ConfigError("'stack' must be an object")
        ff = given.get("ferrofluid", {})
        stack.update({k: v for k, v in given.items() if k != "ferrofluid"})
        if not isinstance(ff, dict):
            raise ConfigError("'stack.ferrofluid' must be an object")
        stack["ferrofluid"].update(ff)
        kw["stack"] = stack
    if "temperature_k" in obj:
        kw["temperature_k"] = float(obj["temperature_k"])
    if "grid" in obj:
        kw["grid"] = Grid.from_json({**DEFAULT_GRID, **obj["grid"]})
    if "engine" in obj:
        kw["engine"] = dict(obj["engine"])
    if "format" in obj:
        kw["fmt"] = str(obj["format"]).lower()
    if "out" in obj:
        kw["out"] = str(obj["out"])
    if "refine_tol_nm" in obj:
        kw["refine_tol_nm"] = float(obj["refine_tol_nm"])
    if "sweep" in obj:
        sw = obj["sweep"]
        kw["sweep_axis"] = str(sw.get("axis", "")).upper() or None
        kw["sweep_values"] = tuple(sw.get("values", ()))
    if "materials" in obj:
        m = obj["materials"]
        kw["material_names"] = tuple(m.get("names", ()))
        if "xi" in m:
            kw["xi_grid"] = Grid.from_json({**DEFAULT_XI_GRID, **m["xi"]})
    return RunConfig(**kw)


def resolve_db(cli_path: str | None, cfg: RunConfig) -> MaterialDB:
    path = cli_path or cfg.db_path or os.environ.get("FERROCASIMIR_DB")
    if not path:
        return default_db()
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read material database {path}: {exc}") from None
    try:
        return load_material_db(data)
    except MaterialError as exc:
        raise ConfigError(f"material database {path}: {exc}") from None


def _lookup(db: MaterialDB, name: str) -> MaterialRecord:
    try:
        return db[name]
    except KeyError:
        raise ConfigError(f"unknown material {name!r}") from None


def build_stack(desc: dict, db: MaterialDB, temperature_k: float) -> FourLayerStack:
    ff = desc.get("ferrofluid", {})
    for key in ("solvent", "particle"):
        _lookup(db, ff.get(key, ""))
    for key in ("a", "coating", "substrate"):
        _lookup(db, desc.get(key, ""))
    try:
        gap = FerrofluidSpec.from_json(ff, db, temperature_k)
        return FourLayerStack(
            db[desc["a"]], gap, db[desc["coating"]], float(desc["b1_nm"]), db[desc["substrate"]]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid stack description: {exc}") from None


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write_atomic(text: str, out: str | None) -> None:
    """Write ``text`` to ``out`` (or stdout) via a temporary file and rename."""
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent or Path("."))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta(db: MaterialDB, cfg: RunConfig, command: str) -> dict:
    return {
        "command": command,
        "db_sha256": db.sha256,
        "engine_version": ENGINE_VERSION,
        "config": cfg.echo(),
    }


def curve_row(point) -> tuple:
    b = point.breakdown
    return (point.ell, b.te0, b.tm0, b.te_pos, b.tm_pos, b.total, b.normalized)


def _eq_row(e) -> tuple:
    return (e.ell_star, e.kind.value, e.bracket[0], e.bracket[1], e.residual, e.iterations)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def _column(db: MaterialDB, name: str, temperature_k: float) -> Callable[[float], float]:
    """Permittivity function for a material name or 'solvent+particle@phi'."""
    if "+" in name:
        try:
            mix, phi = name.rsplit("@", 1)
            solvent, particle = mix.split("+", 1)
            phi_v = float(phi)
        except ValueError:
            raise ConfigError(f"bad ferrofluid column {name!r}; expected solvent+particle@phi") from None
        rec_s, rec_p = _lookup(db, solvent), _lookup(db, particle)
        try:
            spec = FerrofluidSpec(rec_s, rec_p, phi_v, 20.0, rec_p.ms_a_per_m or 0.0, temperature_k)
        except ValueError as exc:
            raise ConfigError(f"column {name!r}: {exc}") from None
        return lambda xi: ferrofluid_permittivity(spec, xi)
    model = _lookup(db, name).model

    def value(xi: float) -> float:
        try:
            return eval_permittivity(model, xi)
        except MaterialError:
            return math.inf
    return value


def cmd_materials(db: MaterialDB, cfg: RunConfig, names: Sequence[str]) -> str:
    names = list(names) or list(cfg.material_names) or list(db)
    funcs = [_column(db, n, cfg.temperature_k) for n in names]
    xis = cfg.xi_grid.points()
    table = [[f(x) for f in funcs] for x in xis]
    if cfg.fmt == "json":
        return to_json({
            "meta": {"command": "materials", "db_sha256": db.sha256, "engine_version": ENGINE_VERSION,
                     "xi_grid": cfg.xi_grid.to_json()},
            "xi_ev": xis,
            "eps": {n: [row[j] for row in table] for j, n in enumerate(names)},
        })
    return to_csv(["xi_ev", *names], [[x, *row] for x, row in zip(xis, table)])


def cmd_curve(db: MaterialDB, cfg: RunConfig) -> str:
    stack = build_stack(cfg.stack, db, cfg.temperature_k)
    curve = pressure_curve(cfg.grid.points(), stack, cfg.engine_config())
    rows = [curve_row(p) for p in curve]
    if cfg.fmt == "json":
        return to_json({"meta": _meta(db, cfg, "curve"), "rows": [dict(zip(CURVE_COLUMNS, r)) for r in rows]})
    return to_csv(CURVE_COLUMNS, rows)


def cmd_equilibria(db: MaterialDB, cfg: RunConfig) -> str:
    stack = build_stack(cfg.stack, db, cfg.temperature_k)
    ecfg = cfg.engine_config()
    curve = pressure_curve(cfg.grid.points(), stack, ecfg)
    eqs = find_equilibria(curve, stack, ecfg, cfg.refine_tol_nm) if len(curve) >= 2 else []
    if cfg.fmt == "json":
        return to_json({"meta": _meta(db, cfg, "equilibria"), "equilibria": [e.to_json() for e in eqs]})
    return to_csv(EQUILIBRIUM_COLUMNS, [_eq_row(e) for e in eqs])


def cmd_sweep(db: MaterialDB, cfg: RunConfig, axis: str | None, values: Sequence[str]) -> str:
    axis = (axis or cfg.sweep_axis or "").upper()
    try:
        axis_e = SweepAxis(axis)
    except ValueError:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {[a.value for a in SweepAxis]}") from None
    vals = list(values) or list(cfg.sweep_values)
    if not vals:
        raise ConfigError("sweep needs at least one value")
    if axis_e in (SweepAxis.METAL, SweepAxis.SOLVENT):
        for v in vals:
            _lookup(db, str(v))
        vals = [str(v) for v in vals]
    else:
        try:
            vals = [float(v) for v in vals]
        except ValueError as exc:
            raise ConfigError(f"sweep values must be numbers for {axis}: {exc}") from None
    stack = build_stack(cfg.stack, db, cfg.temperature_k)
    try:
        entries = sweep(axis_e, vals, stack, cfg.grid.points(), cfg.engine_config(), db, cfg.refine_tol_nm)
    except (MaterialError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.fmt == "json":
        meta = _meta(db, cfg, "sweep")
        meta["axis"] = axis_e.value
        return to_json({
            "meta": meta,
            "entries": [
                {
                    "value": e.value,
                    "rows": [dict(zip(CURVE_COLUMNS, curve_row(p))) for p in e.curve],
                    "equilibria": [q.to_json() for q in e.equilibria],
                }
                for e in entries
            ],
        })
    rows = [(e.value, *curve_row(p)) for e in entries for p in e.curve]
    return to_csv(("value", *CURVE_COLUMNS), rows)


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


def _check(name: str, measured: float, tolerance: float, **detail) -> dict:
    ok = math.isfinite(measured) and measured <= tolerance
    return {"name": name, "passed": bool(ok), "measured": measured, "tolerance": tolerance, **detail}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b else abs(a - b)


def _constant_stack(eps_a: float, eps_m: float, eps_b1: float, b1: float) -> FourLayerStack:
    """Dispersionless layers on a Drude substrate (an ideal reflector at xi = 0)."""
    rec = lambda n, e: MaterialRecord(n, Constant(e), "validation fixture")  # noqa: E731
    metal = MaterialRecord("metal", Drude(9.0, 0.03), "validation fixture")
    return FourLayerStack(rec("a", eps_a), FerrofluidSpec.pure(rec("m", eps_m)), rec("b1", eps_b1), b1, metal)


def validation_checks(db: MaterialDB) -> list[dict]:
    """Oracle comparisons of the engine against closed forms and brute force."""
    checks = []
    Li = asymptotics.polylog
    checks.append(_check("polylog Li3(1)", abs(Li(3, 1.0) - 1.2020569032), 1e-10))
    checks.append(_check("polylog Li2(-1)", abs(Li(2, -1.0) + math.pi**2 / 12), 1e-12))
    checks.append(_check("perfect conductor at 100 nm", _rel(perfect_conductor_pressure(100.0), -13.002), 1e-3))

    cfg = EngineConfig()
    base = dict(solvent=db["toluene"], particle=db["magnetite"], phi=0.05, diameter_nm=20.0)
    worst = 0.0
    for mu in (1.1, 2.0, 5.0):
        ms = ms_for_permeability(mu, 0.05, 20.0, 300.0)
        gap = FerrofluidSpec(ms=ms, temperature_k=300.0, **base)
        stack = FourLayerStack(db["polystyrene"], gap, db["teflon"], 10.0, db["gold"])
        for ell in (10.0, 100.0, 1000.0):
            worst = max(worst, _rel(mode_term(0, TE, ell, stack, cfg), asymptotics.te_thermal(ell, gap.mu0)))
    checks.append(_check("TE n=0 vs te_thermal", worst, 1e-6))

    worst_small = worst_large = 0.0
    for eps_m in (2.2, 3.0):
        triple = asymptotics.StaticTriple(2.4, eps_m, 2.1)
        ell = 10.0
        small = mode_term(0, TM, ell, _constant_stack(2.4, eps_m, 2.1, 1e3 * ell), cfg)
        worst_small = max(worst_small, _rel(small, asymptotics.tm_thermal_small_gap(ell, triple)))
        ell = 1e4
        large = mode_term(0, TM, ell, _constant_stack(2.4, eps_m, 2.1, 1e-4 * ell), cfg)
        worst_large = max(worst_large, _rel(large, asymptotics.tm_thermal_large_gap(ell, 1e-4 * ell, triple)))
    checks.append(_check("TM n=0 vs tm_thermal_small_gap (b1/ell=1e3)", worst_small, 1e-3))
    checks.append(_check("TM n=0 vs tm_thermal_large_gap (b1/ell=1e-4)", worst_large, 1e-3))

    mismatches = 0
    for eps_m in (2.2, 3.0, 1.8):
        triple = asymptotics.StaticTriple(2.4, eps_m, 2.1)
        regime = asymptotics.sign_regime(triple)
        b1 = 100.0
        small = mode_term(0, TM, 1e-2 * b1, _constant_stack(2.4, eps_m, 2.1, b1), cfg)
        large = mode_term(0, TM, 1e2 * b1, _constant_stack(2.4, eps_m, 2.1, b1), cfg)
        expected = {
            asymptotics.SignRegime.ATTRACT_SMALL_REPEL_LARGE: (-1, 1),
            asymptotics.SignRegime.REPEL_SMALL_ATTRACT_LARGE: (1, -1),
            asymptotics.SignRegime.ALWAYS_ATTRACT: (-1, -1),
        }[regime]
        mismatches += (math.copysign(1, small) != expected[0]) + (math.copysign(1, large) != expected[1])
    checks.append(_check("TM n=0 sign regimes", float(mismatches), 0.0))

    gap = FerrofluidSpec(ms=db["magnetite"].ms_a_per_m, temperature_k=300.0, **base)
    stack = FourLayerStack(db["polystyrene"], gap, db["teflon"], 10.0, db["gold"])
    ell = 100.0
    fast = casimir_pressure(ell, stack, cfg)
    slow = brute_force_pressure(ell, stack, fast.n_used - 1, 6001)
    checks.append(_check("engine vs brute force at 100 nm", _rel(fast.total, slow), 1e-6))
    return checks


def cmd_validate(db: MaterialDB, cfg: RunConfig) -> tuple[str, bool]:
    checks = validation_checks(db)
    passed = all(c["passed"] for c in checks)
    doc = {
        "meta": {"command": "validate", "db_sha256": db.sha256, "engine_version": ENGINE_VERSION},
        "passed": passed,
        "checks": checks,
    }
    return to_json(doc), passed


# --------------------------------------------------------------------------
# Entry point
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--db", help="material database (default: $FERROCASIMIR_DB, then the shipped one)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--out", help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="ferrocasimir", description="Casimir pressure across a ferrofluid gap")
    sub = p.add_subparsers(dest="command", required=True)
    m = sub.add_parser("materials", parents=[common], help="tabulate eps(i xi)")
    m.add_argument("names", nargs="*", help="material names or solvent+particle@phi")
    m.add_argument("--xi-min", type=float)
    m.add_argument("--xi-max", type=float)
    m.add_argument("--xi-count", type=int)
    sub.add_parser("curve", parents=[common], help="pressure versus separation")
    sub.add_parser("breakdown", parents=[common], help="same as curve")
    sub.add_parser("equilibria", parents=[common], help="zeros of the pressure and their stability")
    s = sub.add_parser("sweep", parents=[common], help="curves over one parameter")
    s.add_argument("--axis", type=str.upper, choices=[a.value for a in SweepAxis])
    s.add_argument("values", nargs="*")
    sub.add_parser("validate", parents=[common], help="run the oracle checks")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.format:
            overrides["fmt"] = args.format
        if args.out:
            overrides["out"] = args.out
        if args.command == "materials" and any(
            v is not None for v in (args.xi_min, args.xi_max, args.xi_count)
        ):
            g = cfg.xi_grid
            overrides["xi_grid"] = Grid(
                args.xi_min if args.xi_min is not None else g.min,
                args.xi_max if args.xi_max is not None else g.max,
                args.xi_count if args.xi_count is not None else g.count,
                g.spacing,
            )
        if overrides:
            cfg = RunConfig(**{**cfg.__dict__, **overrides})
        if cfg.fmt not in ("csv", "json"):
            raise ConfigError(f"unknown format {cfg.fmt!r}")
        db = resolve_db(args.db, cfg)

        status = EXIT_OK
        if args.command == "materials":
            text = cmd_materials(db, cfg, args.names)
        elif args.command in ("curve", "breakdown"):
            text = cmd_curve(db, cfg)
        elif args.command == "equilibria":
            text = cmd_equilibria(db, cfg)
        elif args.command == "sweep":
            text = cmd_sweep(db, cfg, args.axis, args.values)
        else:
            text, ok = cmd_validate(db, cfg)
            status = EXIT_OK if ok else EXIT_VALIDATION
        write_atomic(text, cfg.out)
        return status
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EngineError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MaterialError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
