"""Command-line experiment runner.

    measconv verify      --config z2-swap [--config ...] [--seed N] [--mode exact|float]
    measconv approximate --config circle-rotation-uniform
    measconv ellis       --config s3-natural
    measconv convolve    --system z3-rotation --mu dirac:1 --nu nu.json

Exit status: 0 every check passed, 1 a check or statistical test failed,
2 bad configuration or construction error, 3 unsolvable approximation request.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from measconv import __version__
from measconv.approximation import (
    ApproximationRequest,
    PinnedConstraint,
    UnsolvableRequest,
    approximate_action,
)
from measconv.convolution import ConvolutionError, convolve
from measconv.ellis import EllisError, ellis_equality_check
from measconv.groups import ActionError, ActionSystem, builtin_system, load_table
from measconv.measures import (
    FiniteMeasure,
    MeasureError,
    SampledMeasure,
    average_of_points,
    dirac,
    from_record,
    to_record,
    uniform_arc,
    uniform_circle,
)
from measconv.suites import homomorphism, run_circle, run_finite

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_UNSOLVABLE = 0, 1, 2, 3
SCENARIO_ENV = "MEASCONV_SCENARIO_DIR"
BUILTIN_SCENARIOS = Path(__file__).with_name("scenarios")
TOP_KEYS = {"name", "system", "mode", "seed", "verify", "approximate", "ellis", "output"}


class ConfigError(ValueError):
    pass


# -- configuration -----------------------------------------------------------


def find_scenario(ref: str) -> Path:
    """Resolve ``ref`` as a path, then as a name in the scenario directories."""
    p = Path(ref)
    if p.suffix == ".json" and p.is_file():
        return p
    dirs = [Path(d) for d in os.environ.get(SCENARIO_ENV, "").split(os.pathsep) if d]
    for d in dirs + [BUILTIN_SCENARIOS]:
        cand = d / f"{ref}.json"
        if cand.is_file():
            return cand
    raise ConfigError(f"no scenario {ref!r} (looked in {', '.join(map(str, dirs + [BUILTIN_SCENARIOS]))})")


def load_config(ref: str) -> dict:
    path = find_scenario(ref)
    text = path.read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if "system" not in cfg:
        raise ConfigError(f"{path}: missing 'system'")
    cfg.setdefault("name", path.stem)
    cfg["_base"] = str(path.parent)
    return cfg


def config_hash(cfg: dict) -> str:
    public = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return hashlib.sha256(json.dumps(public, sort_keys=True).encode()).hexdigest()


def build_system(spec, base: str = ".") -> ActionSystem:
    if isinstance(spec, str):
        return builtin_system(spec)
    if isinstance(spec, dict) and "table" in spec:
        path = Path(spec["table"])
        return load_table(path if path.is_absolute() else Path(base) / path)
    raise ConfigError("system must be a built-in name or {\"table\": path}")


def _number(v, what: str):
    if isinstance(v, bool):
        raise ConfigError(f"{what}: expected a number")
    if isinstance(v, (int, float)):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v)
        except ValueError:
            pass
    raise ConfigError(f"{what}: cannot read {v!r} as a number")


def _group_index(group, name):
    if group.labels and name in group.labels:
        return group.labels.index(name)
    try:
        return group.check(int(name))
    except (TypeError, ValueError):
        raise ConfigError(f"unknown group element {name!r}") from None


def build_measure(spec, sys: ActionSystem, on_group: bool, base: str = "."):
    """Measure from a config spec; ``on_group`` picks G rather than X.

    Specs: ``"uniform"``; ``"dirac:<p>"``; ``"arc:<start>,<length>"`` (circle);
    ``{"atoms": [[p, weight], ...]}`` with string fractions or floats; a
    serialized measure record; a path to a file holding one.
    """
    circle = not sys.is_finite
    if circle:
        def index(p):
            return float(p)
        size = None
    elif on_group:
        def index(p):
            return _group_index(sys.group, p)
        size = sys.group.order
    else:
        index = sys.space.index
        size = sys.space.size
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        if kind == "uniform" and not arg:
            return uniform_circle() if circle else average_of_points(range(size))
        if kind == "dirac":
            return dirac(index(arg))
        if kind == "arc" and circle:
            start, length = (float(t) for t in arg.split(","))
            return uniform_arc(start, length)
        path = Path(spec) if Path(spec).is_absolute() else Path(base) / spec
        if path.is_file():
            try:
                return from_record(json.loads(path.read_text()))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        raise ConfigError(f"unknown measure spec {spec!r}")
    if isinstance(spec, dict) and "format" in spec:
        return from_record(spec)
    if isinstance(spec, dict) and "atoms" in spec:
        atoms = []
        for item in spec["atoms"]:
            p, w = item
            w = _number(w, f"weight of {p!r}")
            atoms.append((index(p), Fraction(w) if isinstance(w, int) else w))
        return FiniteMeasure(tuple(atoms))
    raise ConfigError(f"cannot build a measure from {spec!r}")


def _section(cfg: dict, key: str) -> dict:
    sec = cfg.get(key)
    if not isinstance(sec, dict):
        raise ConfigError(f"scenario {cfg['name']!r} has no '{key}' section")
    return sec


def _positive_int(sec: dict, key: str, default: int) -> int:
    v = sec.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{key} must be a positive integer, got {v!r}")
    return v


def _delta(sec: dict) -> float:
    d = float(sec.get("delta", 0.05))
    if not 0 < d < 1:
        raise ConfigError(f"delta must lie in (0, 1), got {d}")
    return d


# -- commands ----------------------------------------------------------------


def _float_mode(m):
    return m.to_float() if isinstance(m, FiniteMeasure) else m


def run_verify(cfg: dict) -> dict:
    sec = cfg.get("verify", {})
    sys_ = build_system(cfg["system"], cfg["_base"])
    mode = cfg.get("mode", "exact")
    seed = cfg.get("seed", 0)
    trials = _positive_int(sec, "trials", 200)
    tol = sec.get("tolerance", 0 if mode == "exact" else 1e-12)
    if mode not in ("exact", "float"):
        raise ConfigError(f"mode must be exact or float, got {mode!r}")
    if not isinstance(tol, (int, float)) or isinstance(tol, bool) or tol < 0:
        raise ConfigError(f"tolerance must be a non-negative number, got {tol!r}")
    if sys_.is_finite:
        if mode == "float" and tol == 0:
            raise ConfigError("float mode needs a positive tolerance; exact equality of floats is meaningless")
        records = run_finite(sys_, trials, seed, mode, tol)
    else:
        if tol == 0:
            raise ConfigError("circle checks are floating point; tolerance must be positive")
        records = run_circle(sys_, trials, seed, _positive_int(sec, "budget", 400),
                             _positive_int(sec, "runs", 100), _delta(sec))
    return {"records": records, "passed": all(r["passed"] for r in records), "status": None}


def _approx_request(cfg: dict, sys_: ActionSystem) -> ApproximationRequest:
    from measconv.weak import resolve_test_function

    sec = _section(cfg, "approximate")
    base = cfg["_base"]
    float_mode = cfg.get("mode", "exact") == "float"
    target = build_measure(sec.get("target", "uniform"), sys_, True, base)
    constraints = []
    for i, c in enumerate(sec.get("constraints", [])):
        try:
            nu = build_measure(c["pin"], sys_, False, base)
            f = resolve_test_function(c["function"], sys_.space)
            lo, hi = _number(c["lower"], f"constraint {i} lower"), _number(c["upper"], f"constraint {i} upper")
        except KeyError as exc:
            raise ConfigError(f"constraint {i} lacks {exc}") from None
        if float_mode:
            nu, lo, hi = _float_mode(nu), float(lo), float(hi)
        constraints.append(PinnedConstraint(nu, f, lo, hi))
    if float_mode:
        target = _float_mode(target)
    try:
        return ApproximationRequest(
            sys_, target, tuple(constraints), float(sec.get("eps", 0.05)), _delta(sec),
            int(sec.get("max_retries", 3)), bool(sec.get("exact", False)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def run_approximate(cfg: dict) -> dict:
    sys_ = build_system(cfg["system"], cfg["_base"])
    req = _approx_request(cfg, sys_)
    try:
        gbar, report = approximate_action(req, cfg.get("seed", 0))
    except UnsolvableRequest as exc:
        return {"records": [], "passed": False, "status": EXIT_UNSOLVABLE, "error": str(exc)}
    label = sys_.group.label
    return {
        "records": report.as_records(),
        "passed": report.inside,
        "status": None,
        "elements": [label(g) for g in gbar] if sys_.is_finite else [float(g) for g in gbar],
    }


def run_ellis(cfg: dict) -> dict:
    sec = cfg.get("ellis", {})
    sys_ = build_system(cfg["system"], cfg["_base"])
    if not sys_.is_finite:
        raise ConfigError("the ellis command needs a finite system")
    step = Fraction(str(sec.get("grid_step", "1/4")))
    rep = ellis_equality_check(sys_, step, _positive_int(sec, "max_order", 24))
    rep["check"] = "ellis_equality"
    hom = homomorphism(sys_, _positive_int(sec, "trials", 500), cfg.get("seed", 0))
    records = [rep, hom]
    return {"records": records, "passed": all(r["passed"] for r in records), "status": None}


COMMANDS = {"verify": run_verify, "approximate": run_approximate, "ellis": run_ellis}


def run_scenario(command: str, cfg: dict) -> dict:
    """One scenario to a result dict; errors become status 2 entries."""
    out = {"scenario": cfg.get("name"), "system": _system_name(cfg["system"]),
           "seed": cfg.get("seed", 0), "mode": cfg.get("mode", "exact"),
           "config_hash": config_hash(cfg)}
    try:
        out.update(COMMANDS[command](cfg))
    except (ConfigError, ActionError, MeasureError, ConvolutionError, EllisError, ValueError) as exc:
        out.update(records=[], passed=False, status=EXIT_CONFIG,
                   error=f"{type(exc).__name__}: {exc}")
    if out["status"] is None:
        out["status"] = EXIT_OK if out["passed"] else EXIT_FAILED
    return out


def _system_name(spec) -> str:
    return spec if isinstance(spec, str) else str(spec.get("table"))


# -- output ------------------------------------------------------------------


def jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if hasattr(v, "value") and isinstance(getattr(v, "value"), str):
        return v.value
    return v


def render_json(report: dict) -> str:
    return json.dumps(jsonable(report), sort_keys=True, indent=2) + "\n"


def render_csv(report: dict) -> str:
    """One row per record; nested values are JSON-encoded in their cell."""
    buf = io.StringIO()
    for key in ("tool", "version", "command", "status"):
        buf.write(f"# {key}: {report[key]}\n")
    rows = []
    for sc in report["scenarios"]:
        buf.write(f"# scenario {sc['scenario']}: config_hash={sc['config_hash']} status={sc['status']}"
                  + (f" error={sc['error']}" if "error" in sc else "") + "\n")
        for rec in sc["records"]:
            row = {"scenario": sc["scenario"], "system": sc["system"], "seed": sc["seed"], "mode": sc["mode"]}
            for k, v in jsonable(rec).items():
                row[k] = json.dumps(v, sort_keys=True) if isinstance(v, (list, dict)) else v
            rows.append(row)
    fields = ["scenario", "system", "seed", "mode"]
    fields += sorted({k for r in rows for k in r} - set(fields))
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- convolve ----------------------------------------------------------------


def _inline(spec: str):
    """Measure specs given on the command line may be inline JSON objects."""
    if spec.lstrip().startswith("{"):
        try:
            return json.loads(spec)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"inline measure: {exc.msg} at column {exc.colno}") from None
    return spec


def run_convolve(args) -> int:
    try:
        cfg = {"system": args.system}
        base = "."
        if args.config:
            cfg = load_config(args.config[0])
            base = cfg["_base"]
        sys_ = build_system(args.system or cfg["system"], base)
        mu = build_measure(_inline(args.mu), sys_, True, base)
        nu = build_measure(_inline(args.nu), sys_, False, base)
        if args.mode == "float":
            mu, nu = _float_mode(mu), _float_mode(nu)
        result = convolve(sys_, mu, nu)
        if isinstance(result, SampledMeasure):
            raise ConfigError("the convolution is not finitely supported; nothing to serialize")
    except (ConfigError, ActionError, MeasureError, ConvolutionError, ValueError) as exc:
        print(f"measconv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    emit(json.dumps(to_record(result), sort_keys=True) + "\n", args.out)
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="measconv", description="Convolution of measures under group actions.")
    p.add_argument("--version", action="version", version=f"measconv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("verify", "approximate", "ellis", "convolve"):
        s = sub.add_parser(name)
        s.add_argument("--config", action="append", default=[],
                       help=f"scenario name or JSON path (repeatable); names are looked up in ${SCENARIO_ENV}")
        s.add_argument("--seed", type=int)
        s.add_argument("--mode", choices=("exact", "float"))
        s.add_argument("--out")
        s.add_argument("--format", choices=("json", "csv"))
        if name == "convolve":
            s.add_argument("--system")
            s.add_argument("--mu", required=True, help="measure on the group")
            s.add_argument("--nu", required=True, help="measure on the space")
        else:
            s.add_argument("--jobs", type=int, default=1, help="run scenarios in parallel")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "convolve":
        if not args.system and not args.config:
            print("measconv: convolve needs --system or --config", file=sys.stderr)
            return EXIT_CONFIG
        return run_convolve(args)
    if not args.config:
        print("measconv: at least one --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfgs = [load_config(ref) for ref in args.config]
    except (ConfigError, OSError) as exc:
        print(f"measconv: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for cfg in cfgs:
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.mode is not None:
            cfg["mode"] = args.mode
    if args.jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_scenario, [args.command] * len(cfgs), cfgs))
    else:
        results = [run_scenario(args.command, cfg) for cfg in cfgs]
    status = max(r["status"] for r in results)
    report = {"tool": "measconv", "version": __version__, "command": args.command,
              "status": status, "scenarios": results}
    output = cfgs[0].get("output", {}) if len(cfgs) == 1 else {}
    fmt = args.format or output.get("format", "json")
    out = args.out or output.get("path")
    emit(render_csv(report) if fmt == "csv" else render_json(report), out)
    for r in results:
        if "error" in r:
            print(f"measconv: {r['scenario']}: {r['error']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
