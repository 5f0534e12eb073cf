"""Parameter sweeps, bundled figure protocols, and tabular output.

A sweep varies one named builder parameter over a monotone grid while
holding the rest fixed; ``derived`` rules recompute coupled parameters at
every point (e.g. a hot-bath temperature tied to a level spacing).  Every
row solves the steady state independently, so rows can be computed by a
thread pool and merged in axis order.  Rows that fail to converge are
flagged, never dropped.

Bundled presets ``fig1`` .. ``fig6`` reproduce the standard experiment
protocols (cooling curves, heat currents, Zeno scans, absolute-zero scaling,
the perfect-insulation limit, and the qubit-qutrit machine).  Parameter
choices not pinned by the protocol are stamped into the table metadata.
"""

from __future__ import annotations

import ast
import inspect
import json
import math
import operator
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .dynamics import STATIONARITY_TOL, UNIQUENESS_GAP_WARN, steady_state
from .models import MODEL_BUILDERS
from .observables import heat_currents, particle_temperatures

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARYOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def eval_param_expr(expr: str, names: dict[str, float]) -> float:
    """Evaluate a small arithmetic expression over named parameters."""

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown parameter {node.id!r} in expression {expr!r}")
            return float(names[node.id])
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARYOPS:
            return _UNARYOPS[type(node.op)](ev(node.operand))
        raise ValueError(f"unsupported syntax in expression {expr!r}")

    return ev(ast.parse(expr, mode="eval").body)


def _parse_rule(rule: str) -> tuple[str, str]:
    name, _, expr = rule.partition("=")
    name, expr = name.strip(), expr.strip()
    if not name.isidentifier() or not expr:
        raise ValueError(f"derived rule must look like 'name = expression', got {rule!r}")
    return name, expr


@dataclass(frozen=True)
class SweepConfig:
    """One varied parameter axis over a fixed model context."""

    model_tag: str
    fixed: dict[str, float]
    axis: str
    values: tuple[float, ...]
    derived: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ("temperatures", "currents")
    label: str = ""
    tolerance: float = STATIONARITY_TOL

    def __post_init__(self):
        if self.model_tag not in MODEL_BUILDERS:
            raise ValueError(
                f"unknown model tag {self.model_tag!r}; valid: {sorted(MODEL_BUILDERS)}"
            )
        object.__setattr__(self, "fixed", dict(self.fixed))
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("axis needs at least one value")
        diffs = [b - a for a, b in zip(values, values[1:])]
        if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ValueError("axis values must be strictly monotone")
        object.__setattr__(self, "values", values)
        rules = tuple(self.derived)
        for r in rules:
            _parse_rule(r)
        object.__setattr__(self, "derived", rules)


@dataclass(frozen=True, eq=False)
class SweepTable:
    """Rows of observables, one per axis sample, plus provenance metadata."""

    columns: tuple[str, ...]
    data: dict[str, tuple[float, ...]]
    flags: tuple[str, ...]
    metadata: dict[str, object]

    @property
    def n_rows(self) -> int:
        return len(self.flags)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.data[name], dtype=float)

    def to_csv(self) -> str:
        lines = [f"# {k}: {_fmt_meta(v)}" for k, v in sorted(self.metadata.items())]
        lines.append(",".join(self.columns + ("flags",)))
        for i in range(self.n_rows):
            cells = [_fmt(self.data[c][i]) for c in self.columns]
            cells.append(self.flags[i])
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "metadata": self.metadata,
            "columns": {c: [_round12(v) for v in self.data[c]] for c in self.columns},
            "flags": list(self.flags),
        }
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _round12(v: float):
    return float(_fmt(v)) if math.isfinite(v) else v


def _fmt_meta(v) -> str:
    if isinstance(v, float):
        return _fmt(v)
    if isinstance(v, dict):
        return " ".join(f"{k}={_fmt_meta(val)}" for k, val in sorted(v.items()))
    return str(v)


def resolve_parameters(config: SweepConfig, axis_value: float) -> dict[str, float]:
    """Fixed context plus the axis value, with derived rules applied in order."""
    params = dict(config.fixed)
    params[config.axis] = float(axis_value)
    for rule in config.derived:
        name, expr = _parse_rule(rule)
        params[name] = eval_param_expr(expr, params)
    return params


def build_from_parameters(model_tag: str, params: dict[str, float]):
    """Instantiate a model builder from a flat parameter dictionary."""
    builder = MODEL_BUILDERS[model_tag]
    sig = inspect.signature(builder)
    missing = [
        name
        for name, p in sig.parameters.items()
        if p.default is inspect.Parameter.empty and name not in params
    ]
    if missing:
        raise ValueError(f"missing required parameter(s) for {model_tag}: {', '.join(missing)}")
    kwargs = {k: v for k, v in params.items() if k in sig.parameters}
    return builder(**kwargs)


def _solve_row(config: SweepConfig, axis_value: float) -> tuple[dict[str, float], list[str]]:
    params = resolve_parameters(config, axis_value)
    row: dict[str, float] = {config.axis: float(axis_value)}
    flags: list[str] = []
    try:
        model = build_from_parameters(config.model_tag, params)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = steady_state(model, tol=config.tolerance)
    except Exception as exc:  # noqa: BLE001 - row failures must not kill the sweep
        flags.append(f"failed:{type(exc).__name__}")
        row["residual"] = math.nan
        return row, flags

    n = model.shape.n_particles
    if "temperatures" in config.outputs:
        for i, reading in enumerate(particle_temperatures(model, result.rho)):
            row[f"T{i + 1}_s"] = reading.value
            flags.extend(f"T{i + 1}:{f}" for f in reading.flags)
    if "currents" in config.outputs:
        for i, q in enumerate(heat_currents(model, result.rho)):
            row[f"Q{i + 1}"] = float(q)
    row["residual"] = result.residual
    if result.residual > config.tolerance:
        flags.append("unconverged")
    if result.uniqueness_gap < UNIQUENESS_GAP_WARN:
        flags.append("degenerate_gap")
    return row, flags


def run_sweep(config: SweepConfig, threads: int = 1) -> SweepTable:
    """Solve the steady state at every axis value and tabulate observables."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda v: _solve_row(config, v), config.values))
    else:
        results = [_solve_row(config, v) for v in config.values]

    columns: list[str] = [config.axis]
    for row, _ in results:
        for key in row:
            if key not in columns:
                columns.append(key)
    # residual goes last among the numeric columns
    if "residual" in columns:
        columns.remove("residual")
        columns.append("residual")

    data = {
        c: tuple(row.get(c, math.nan) for row, _ in results)
        for c in columns
    }
    flags = tuple(";".join(f) for _, f in results)
    metadata: dict[str, object] = {
        "model": config.model_tag,
        "axis": config.axis,
        "tool_version": __version__,
        "stationarity_tol": config.tolerance,
    }
    if config.label:
        metadata["label"] = config.label
    for k, v in sorted(config.fixed.items()):
        metadata[k] = v
    for i, rule in enumerate(config.derived):
        metadata[f"derived_{i}"] = rule
    return SweepTable(tuple(columns), data, flags, metadata)


# ---------------------------------------------------------------------------
# figure presets


def _fig1_curves() -> list[SweepConfig]:
    fixed = dict(e1=1.0, e2=3.0, t_cold=1.0, p1=1e-3, p2=1e-3, p3=1e-3, g=1e-3)
    th = tuple(np.linspace(1.0, 20.0, 20))
    return [SweepConfig("two_qubit", fixed, "t_hot", th, label="cooling_vs_hot_bath")]


def _fig2_curves() -> list[SweepConfig]:
    cfg = _fig1_curves()[0]
    return [replace(cfg, label="heat_current_vs_hot_bath")]


def _fig3_curves() -> list[SweepConfig]:
    fixed = dict(e1=1.0, e2=3.0, t_cold=1.0, t_hot=4.0, p1=1e-3, g=1e-3)
    grid = tuple(np.geomspace(1e-4, 10.0, 25))
    return [
        SweepConfig("two_qubit", {**fixed, "p3": 1e-3}, "p2", grid, label="zeno_p2"),
        SweepConfig("two_qubit", {**fixed, "p2": 1e-3}, "p3", grid, label="zeno_p3"),
    ]


def _fig4_curves() -> list[SweepConfig]:
    # scaling toward absolute zero: raise the spiral gap with the hot bath
    # tied to the engine gap (e3/t_hot = 0.1 stays well below 1); the target
    # gap is small so its populations stay resolvable as T1 drops
    fixed = dict(e1=0.1, t_cold=1.0, p1=3e-6, p2=1e-3, p3=1e-3, g=1e-3)
    grid = tuple(np.geomspace(0.2, 20.0, 13))
    return [
        SweepConfig(
            "two_qubit",
            fixed,
            "e2",
            grid,
            derived=("t_hot = 10.0 * (e2 - e1)",),
            label="absolute_zero_scaling",
        )
    ]


def _fig5_curves() -> list[SweepConfig]:
    fixed = dict(e1=1.0, e2=3.0, t_cold=1.0, p2=1e-3, p3=1e-3, g=1e-3)
    p1 = (1e-5, 3e-6, 1e-6, 3e-7, 1e-7)
    return [
        SweepConfig("two_qubit", {**fixed, "t_hot": th}, "p1", p1, label=f"insulation_th{th:g}")
        for th in (4.0, 8.0, 12.0)
    ]


def _fig6_curves() -> list[SweepConfig]:
    fixed = dict(e1=1.0, e2=1.0, t_cold=1.0, p1=1e-3, p2=1e-3, p3=1e-3, g=1e-3, h=1e-3)
    th = tuple(np.linspace(1.0, 20.0, 20))
    return [SweepConfig("qubit_qutrit", fixed, "t_hot", th, label="qutrit_cooling_vs_hot_bath")]


_FIGURES = {
    "fig1": (_fig1_curves, "cold-qubit temperature difference vs hot-bath temperature"),
    "fig2": (_fig2_curves, "stationary heat current of the cold qubit vs hot-bath temperature"),
    "fig3": (_fig3_curves, "cold-qubit temperature vs spiral/engine reset rates (Zeno scan)"),
    "fig4": (_fig4_curves, "cold-qubit temperature vs spiral gap, hot bath tied to engine gap"),
    "fig5": (_fig5_curves, "cold-qubit temperature vs its own reset rate (insulation limit)"),
    "fig6": (_fig6_curves, "qubit-qutrit machine: cold-qubit temperature vs hot-bath temperature"),
}

FIGURE_IDS = tuple(sorted(_FIGURES))


def figure_curves(figure_id: str) -> list[SweepConfig]:
    """All sweep configs (one per curve) behind a bundled figure protocol."""
    if figure_id not in _FIGURES:
        raise KeyError(f"unknown figure id {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}")
    builder, _ = _FIGURES[figure_id]
    return builder()


def figure_description(figure_id: str) -> str:
    return _FIGURES[figure_id][1]


def preset(figure_id: str) -> SweepConfig:
    """The (primary) sweep config of a bundled figure protocol."""
    return figure_curves(figure_id)[0]


def run_figure(figure_id: str, threads: int = 1) -> list[SweepTable]:
    """Run every curve of a figure protocol."""
    tables = []
    for cfg in figure_curves(figure_id):
        table = run_sweep(cfg, threads=threads)
        table.metadata["figure"] = figure_id
        table.metadata["description"] = figure_description(figure_id)
        tables.append(table)
    return tables


# ---------------------------------------------------------------------------
# derived experiments


@dataclass(frozen=True, eq=False)
class ExtrapolationResult:
    """Outcome of an insulation-limit extrapolation."""

    limit: float
    converged: bool
    table: SweepTable


def extrapolate_p1_limit(base_config: SweepConfig, p1_sequence) -> ExtrapolationResult:
    """Drive the cold particle's reset rate to zero and extrapolate its temperature.

    Solves the steady state along the (strictly decreasing) ``p1_sequence``,
    requires the successive temperature differences to contract, and
    extrapolates linearly in ``p1`` from the tail of the sequence.
    """
    seq = tuple(float(p) for p in p1_sequence)
    if len(seq) < 4:
        raise ValueError("need at least 4 points in the p1 sequence")
    if any(b >= a for a, b in zip(seq, seq[1:])) or seq[-1] <= 0:
        raise ValueError("p1 sequence must be strictly decreasing and positive")

    config = replace(base_config, axis="p1", values=seq)
    table = run_sweep(config)
    temps = table.column("T1_s")
    diffs = np.abs(np.diff(temps))

    scale = max(1.0, float(np.max(np.abs(temps))))
    tiny = 1e-9 * scale  # differences below solver noise do not count as motion
    moving = diffs > tiny
    contracting = all(
        d2 < d1 or d2 <= tiny for d1, d2 in zip(diffs, diffs[1:])
    )
    if not np.any(moving):
        limit = float(temps[-1])
        converged = True
    else:
        coeffs = np.polyfit(seq[-3:], temps[-3:], 1)
        limit = float(np.polyval(coeffs, 0.0))
        converged = bool(contracting)

    table.metadata["p1_limit"] = limit
    table.metadata["p1_limit_converged"] = converged
    return ExtrapolationResult(limit, converged, table)


@dataclass(frozen=True, eq=False)
class ZenoScanResult:
    """Temperature curve over a bath-rate axis with its detected minimum."""

    table: SweepTable
    argmin_rate: float
    argmin_temperature: float
    interior: bool
    flat: bool


def zeno_scan(config: SweepConfig) -> ZenoScanResult:
    """Scan a reset rate over a wide range and locate the best-cooling point.

    Weak rates cannot drive the machine and strong rates freeze it (watching
    the particle too often suppresses the coherent swap), so a working
    machine shows an interior minimum of the cold-particle temperature.
    """
    positive = [v for v in config.values if v > 0]
    if not positive or max(positive) / min(positive) < 100.0:
        raise ValueError("rate axis must span at least two orders of magnitude")
    table = run_sweep(config)
    temps = table.column("T1_s")
    rates = table.column(config.axis)
    k = int(np.argmin(temps))
    spread = float(np.max(temps) - np.min(temps))
    flat = spread < 1e-9 * max(1.0, float(np.max(np.abs(temps))))
    interior = (not flat) and 0 < k < len(temps) - 1
    table.metadata["argmin_" + config.axis] = float(rates[k])
    if flat or not interior:
        table.metadata["argmin_note"] = "flat curve" if flat else "minimum at scan boundary"
    return ZenoScanResult(table, float(rates[k]), float(temps[k]), interior, flat)
