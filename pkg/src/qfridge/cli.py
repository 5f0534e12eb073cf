"""Command-line front end.

Commands::

    qfridge steady   --config fridge.ini [--out DIR] [--format csv|json]
    qfridge evolve   --config fridge.ini --t-final T [--dt DT] [--out DIR]
    qfridge sweep    --config fridge.ini [--out DIR] [--threads N]
    qfridge figure   FIGURE_ID [--out DIR] [--threads N]
    qfridge validate [--tol TOL]

The config file is INI-style: a ``[model]`` section (``tag`` plus energies and
couplings), a ``[baths]`` section (temperatures and rates), and for the sweep
command a ``[sweep]`` section (``axis``, ``values`` or ``start/stop/num``,
optional ``derived`` rules).  Any key can be overridden on the command line
with ``--set key=value``.

Exit codes: 0 success, 1 usage error, 2 convergence failure, 3 validation
failure.  All numeric output is printed with 12 significant digits.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import evolve, steady_state
from .experiments import (
    FIGURE_IDS,
    SweepConfig,
    SweepTable,
    build_from_parameters,
    figure_description,
    run_figure,
    run_sweep,
)
from .models import MODEL_BUILDERS, thermal_state
from .observables import heat_currents, particle_temperatures
from .validate import run_checks

DEFAULT_TOL = 1e-10

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONVERGENCE = 2
EXIT_VALIDATION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def load_config(path: str, overrides: list[str]) -> dict:
    """Read the INI config into one flat parameter dictionary."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise UsageError(f"cannot read config file {path!r}")
    params: dict[str, object] = {}
    for section in ("model", "baths"):
        if parser.has_section(section):
            for key, raw in parser.items(section):
                params[key] = _parse_value(key, raw)
    sweep = dict(parser.items("sweep")) if parser.has_section("sweep") else None
    for item in overrides:
        key, _, raw = item.partition("=")
        if not key or not raw:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key = key.strip().lower()
        if sweep is not None and key in ("axis", "values", "start", "stop", "num",
                                         "spacing", "derived"):
            sweep[key] = raw.strip()
        else:
            params[key] = _parse_value(key, raw.strip())
    params["_sweep"] = sweep
    return params


def _parse_value(key: str, raw: str):
    if key == "tag":
        return raw.strip()
    try:
        return float(raw)
    except ValueError as exc:
        raise UsageError(f"field {key!r}: expected a number, got {raw!r}") from exc


def _model_from_params(params: dict):
    tag = params.get("tag")
    if tag is None:
        raise UsageError("missing required field 'tag' in [model] section")
    if tag not in MODEL_BUILDERS:
        raise UsageError(f"unknown model tag {tag!r}; valid: {', '.join(sorted(MODEL_BUILDERS))}")
    numbers = {k: v for k, v in params.items() if isinstance(v, float)}
    try:
        return build_from_parameters(tag, numbers), numbers
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _sweep_config_from_params(params: dict, tol: float) -> SweepConfig:
    sweep = params.get("_sweep")
    if not sweep:
        raise UsageError("missing [sweep] section in config")
    if "axis" not in sweep:
        raise UsageError("missing required field 'axis' in [sweep] section")
    axis = sweep["axis"].strip()
    if "values" in sweep:
        values = tuple(float(v) for v in sweep["values"].replace(",", " ").split())
    elif {"start", "stop", "num"} <= set(sweep):
        start, stop = float(sweep["start"]), float(sweep["stop"])
        num = int(float(sweep["num"]))
        if sweep.get("spacing", "linear").strip() == "log":
            values = tuple(np.geomspace(start, stop, num))
        else:
            values = tuple(np.linspace(start, stop, num))
    else:
        raise UsageError("[sweep] needs either 'values' or 'start'/'stop'/'num'")
    derived = tuple(
        line.strip() for line in sweep.get("derived", "").splitlines() if line.strip()
    )
    tag = params.get("tag")
    if tag is None:
        raise UsageError("missing required field 'tag' in [model] section")
    fixed = {k: v for k, v in params.items() if isinstance(v, float) and k != axis}
    try:
        return SweepConfig(tag, fixed, axis, values, derived=derived, tolerance=tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write_manifest(out_dir: Path, command: str, parameters: dict, outputs: list[Path],
                    started: float) -> None:
    manifest = {
        "command": command,
        "parameters": {k: v for k, v in sorted(parameters.items()) if not k.startswith("_")},
        "outputs": [p.name for p in outputs],
        "tool_version": __version__,
        "wall_time_s": round(time.time() - started, 6),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True, default=str) + "\n")


def _ensure_out(arg: str | None) -> Path | None:
    if arg is None:
        return None
    out = Path(arg)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _table_filename(figure_id: str | None, table: SweepTable, fmt: str, many: bool) -> str:
    stem = figure_id or "sweep"
    label = table.metadata.get("label")
    if many and label:
        stem = f"{stem}_{label}"
    return f"{stem}.{fmt}"


def _emit_tables(tables: list[SweepTable], out: Path | None, fmt: str,
                 figure_id: str | None = None) -> list[Path]:
    written = []
    for table in tables:
        text = table.to_csv() if fmt == "csv" else table.to_json()
        if out is None:
            sys.stdout.write(text)
        else:
            path = out / _table_filename(figure_id, table, fmt, len(tables) > 1)
            path.write_text(text)
            written.append(path)
    return written


def cmd_steady(args) -> int:
    started = time.time()
    params = load_config(args.config, args.set)
    model, numbers = _model_from_params(params)
    result = steady_state(model, tol=args.tol)
    temps = particle_temperatures(model, result.rho)
    currents = heat_currents(model, result.rho)

    dims = "x".join(str(d) for d in model.shape.dims)
    print(f"model: {model.model_tag} (dims {dims})")
    for i, reading in enumerate(temps):
        flag = f"  [{','.join(reading.flags)}]" if reading.flags else ""
        print(f"T{i + 1}_s = {_fmt(reading.value)}{flag}")
    for i, q in enumerate(currents):
        print(f"Q{i + 1} = {_fmt(q)}")
    print(f"residual = {_fmt(result.residual)}")
    print(f"uniqueness_gap = {_fmt(result.uniqueness_gap)}")

    out = _ensure_out(args.out)
    if out is not None:
        state = {
            "model": model.model_tag,
            "dims": list(model.shape.dims),
            "rho_real": [[_round(v.real) for v in row] for row in result.rho],
            "rho_imag": [[_round(v.imag) for v in row] for row in result.rho],
            "temperatures": [_round(r.value) for r in temps],
            "heat_currents": [_round(q) for q in currents],
            "residual": result.residual,
            "uniqueness_gap": result.uniqueness_gap,
        }
        path = out / "state.json"
        path.write_text(json.dumps(state, indent=1) + "\n")
        _write_manifest(out, "steady", numbers | {"tag": model.model_tag}, [path], started)
    return EXIT_OK if result.residual <= args.tol else EXIT_CONVERGENCE


def _round(v: float) -> float:
    return float(f"{v:.12g}") if math.isfinite(v) else v


def cmd_evolve(args) -> int:
    started = time.time()
    params = load_config(args.config, args.set)
    model, numbers = _model_from_params(params)
    rho0 = np.eye(model.dim, dtype=complex) / model.dim
    traj = evolve(model, rho0, args.t_final, dt=args.dt)

    header = ["time"] + [f"T{i + 1}_s" for i in range(model.shape.n_particles)]
    header += ["trace_defect", "min_eigenvalue"]
    lines = [",".join(header)]
    for t, state in zip(traj.times, traj.states):
        temps = particle_temperatures(model, state)
        trace_defect = abs(float(np.real(np.trace(state))) - 1.0)
        min_eig = float(np.linalg.eigvalsh((state + state.conj().T) / 2)[0])
        cells = [_fmt(t)] + [_fmt(r.value) for r in temps]
        cells += [_fmt(trace_defect), _fmt(min_eig)]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"

    out = _ensure_out(args.out)
    if out is None:
        sys.stdout.write(text)
    else:
        path = out / "trajectory.csv"
        path.write_text(text)
        _write_manifest(out, "evolve", numbers | {"tag": model.model_tag,
                                                  "t_final": args.t_final}, [path], started)
    print(f"final defects: hermiticity={traj.final_defects.hermiticity_defect:.2e} "
          f"trace={traj.final_defects.trace_defect:.2e} "
          f"min_eig={traj.final_defects.min_eigenvalue:.2e}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.time()
    params = load_config(args.config, args.set)
    config = _sweep_config_from_params(params, args.tol)
    table = run_sweep(config, threads=args.threads)
    out = _ensure_out(args.out)
    written = _emit_tables([table], out, args.format)
    if out is not None:
        _write_manifest(out, "sweep", dict(config.fixed) | {"tag": config.model_tag,
                                                            "axis": config.axis}, written, started)
    bad = [f for f in table.flags if "unconverged" in f or "failed" in f]
    return EXIT_CONVERGENCE if bad else EXIT_OK


def cmd_figure(args) -> int:
    started = time.time()
    if args.figure_id not in FIGURE_IDS:
        print(
            f"error: unknown figure id {args.figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    tables = run_figure(args.figure_id, threads=args.threads)
    out = _ensure_out(args.out)
    written = _emit_tables(tables, out, args.format, figure_id=args.figure_id)
    if out is not None:
        _write_manifest(out, f"figure {args.figure_id}",
                        {"figure": args.figure_id,
                         "description": figure_description(args.figure_id)}, written, started)
    bad = [f for t in tables for f in t.flags if "unconverged" in f or "failed" in f]
    return EXIT_CONVERGENCE if bad else EXIT_OK


def cmd_validate(args) -> int:
    results = run_checks(tol=args.tol)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name}: {r.detail}")
        failed += 0 if r.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfridge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qfridge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="INI config file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="override a config key (repeatable)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="stationarity / validation tolerance")
        p.add_argument("--threads", type=int, default=1)

    p_steady = sub.add_parser("steady", help="solve one steady state and report observables")
    common(p_steady)
    p_steady.set_defaults(func=cmd_steady)

    p_evolve = sub.add_parser("evolve", help="integrate the master equation in time")
    common(p_evolve)
    p_evolve.add_argument("--t-final", type=float, required=True)
    p_evolve.add_argument("--dt", type=float, default=None)
    p_evolve.set_defaults(func=cmd_evolve)

    p_sweep = sub.add_parser("sweep", help="run the sweep described by the config")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_figure = sub.add_parser("figure", help="run a bundled figure protocol")
    p_figure.add_argument("figure_id", help=f"one of: {', '.join(FIGURE_IDS)}")
    common(p_figure, config=False)
    p_figure.set_defaults(func=cmd_figure)

    p_validate = sub.add_parser("validate", help="run the built-in invariant suite")
    common(p_validate, config=False)
    p_validate.set_defaults(func=cmd_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
