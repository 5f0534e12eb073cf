"""Built-in invariant suite behind the ``validate`` CLI command.

Each check re-derives a physical or structural property through a route as
independent as possible from the code it exercises: partial traces and reset
dissipators against explicit index loops, the assembled generator against the
direct equation-of-motion evaluation, and the null-space steady state against
long-time integration.  The generator builder is injectable so the suite can
demonstrate its own sensitivity to implementation errors.

All thresholds scale uniformly with the requested tolerance (relative to the
default stationarity tolerance).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import (
    STATIONARITY_TOL,
    Liouvillian,
    build_liouvillian,
    evolve,
    master_rhs,
    steady_state,
)
from .models import (
    FULL_RESET,
    FridgeModel,
    dissipator,
    qubit_qutrit_fridge,
    single_qutrit_fridge,
    two_qubit_fridge,
)
from .observables import heat_currents, particle_temperatures


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _canonical_models() -> list[FridgeModel]:
    return [
        two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, 1e-3),
        qubit_qutrit_fridge(1.0, 1.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3),
        single_qutrit_fridge(1.0, 1.0, 1.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, 1e-3),
    ]


def _equilibrium_models(t: float) -> list[FridgeModel]:
    return [
        two_qubit_fridge(1.0, 3.0, t, t, 1e-3, 1e-3, 1e-3, 1e-3),
        qubit_qutrit_fridge(1.0, 1.0, t, t, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3),
        single_qutrit_fridge(1.0, 1.0, t, t, t, 1e-3, 1e-3, 1e-3, 1e-3),
    ]


def _fast_models() -> list[FridgeModel]:
    # stronger rates so relaxation horizons stay short for the time-evolution
    # cross-check; coupling strength is irrelevant to solver agreement
    return [
        two_qubit_fridge(1.0, 2.5, 1.0, 5.0, 0.3, 0.25, 0.28, 0.3),
        qubit_qutrit_fridge(1.1, 0.9, 1.0, 5.0, 0.3, 0.26, 0.27, 0.3, 0.25),
        single_qutrit_fridge(1.0, 1.2, 1.0, 1.1, 5.0, 0.3, 0.27, 0.26, 0.3),
    ]


def _random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def _trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


# -- explicit index-loop oracles (no reshapes, no einsum) -------------------


def _strides(dims: tuple[int, ...]) -> list[int]:
    out = []
    for i in range(len(dims)):
        out.append(int(np.prod(dims[i + 1:], initial=1)))
    return out


def _loop_partial_trace(rho: np.ndarray, dims: tuple[int, ...], traced: int) -> np.ndarray:
    rem = [d for j, d in enumerate(dims) if j != traced]
    nrem = int(np.prod(rem, initial=1))
    out = np.zeros((nrem, nrem), dtype=complex)
    strides = _strides(dims)
    rem_strides = _strides(tuple(rem))
    for row in itertools.product(*(range(d) for d in rem)):
        for col in itertools.product(*(range(d) for d in rem)):
            r_idx = sum(s * c for s, c in zip(rem_strides, row))
            c_idx = sum(s * c for s, c in zip(rem_strides, col))
            for a in range(dims[traced]):
                full_row = list(row[:traced]) + [a] + list(row[traced:])
                full_col = list(col[:traced]) + [a] + list(col[traced:])
                i = sum(s * c for s, c in zip(strides, full_row))
                j = sum(s * c for s, c in zip(strides, full_col))
                out[r_idx, c_idx] += rho[i, j]
    return out


def _loop_reset_dissipator(rho: np.ndarray, dims: tuple[int, ...], particle: int,
                           energies: tuple[float, ...], temperature: float,
                           rate: float) -> np.ndarray:
    weights = [math.exp(-e / temperature) for e in energies]
    z = sum(weights)
    tau = [w / z for w in weights]
    red = _loop_partial_trace(rho, dims, particle)
    n = int(np.prod(dims, initial=1))
    strides = _strides(dims)
    rem_dims = tuple(d for j, d in enumerate(dims) if j != particle)
    rem_strides = _strides(rem_dims)
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            row = [(i // s) % d for s, d in zip(strides, dims)]
            col = [(j // s) % d for s, d in zip(strides, dims)]
            if row[particle] != col[particle]:
                reset = 0.0
            else:
                rrow = [c for k, c in enumerate(row) if k != particle]
                rcol = [c for k, c in enumerate(col) if k != particle]
                ri = sum(s * c for s, c in zip(rem_strides, rrow))
                rj = sum(s * c for s, c in zip(rem_strides, rcol))
                reset = tau[row[particle]] * red[ri, rj]
            out[i, j] = rate * (reset - rho[i, j])
    return out


# -- individual checks -------------------------------------------------------


def _check_commutators(scale: float, _builder) -> CheckResult:
    worst = 0.0
    for model in _canonical_models():
        comm = model.h0 @ model.h_int - model.h_int @ model.h0
        worst = max(worst, float(np.max(np.abs(comm))))
    return CheckResult(
        "interaction_couples_degenerate_states",
        worst <= 1e-12 * scale,
        f"max |[H0, Hint]| = {worst:.2e}",
    )


def _check_equilibrium(scale: float, builder) -> CheckResult:
    worst_t, worst_q = 0.0, 0.0
    t = 1.3
    for model in _equilibrium_models(t):
        result = steady_state(model, liouvillian=builder(model))
        temps = particle_temperatures(model, result.rho)
        worst_t = max(worst_t, max(abs(r.value - t) for r in temps))
        worst_q = max(worst_q, float(np.max(np.abs(heat_currents(model, result.rho)))))
    passed = worst_t <= 1e-9 * scale and worst_q <= 1e-12 * scale
    return CheckResult(
        "equilibrium_fixed_point",
        passed,
        f"max |T_i - T| = {worst_t:.2e}, max |Q_i| = {worst_q:.2e}",
    )


def _check_energy_balance(scale: float, builder) -> CheckResult:
    worst = 0.0
    for model in _canonical_models():
        result = steady_state(model, liouvillian=builder(model))
        worst = max(worst, abs(float(np.sum(heat_currents(model, result.rho)))))
    return CheckResult(
        "steady_state_energy_balance",
        worst <= 1e-9 * scale,
        f"max |sum_i Q_i| = {worst:.2e}",
    )


def _check_generator_agreement(scale: float, builder) -> CheckResult:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for model in _canonical_models():
        rho = _random_state(rng, model.dim)
        lhs = builder(model).apply(rho)
        rhs = master_rhs(model, rho)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return CheckResult(
        "generator_matches_direct_evaluation",
        worst <= 1e-12 * scale,
        f"max |L vec(rho) - rhs(rho)| = {worst:.2e}",
    )


def _check_oracle_equivalence(scale: float, builder) -> CheckResult:
    worst = 0.0
    for model in _fast_models():
        pmin = min(ch.rate for p in model.particles for ch in p.bath if ch.rate > 0)
        rho0 = np.eye(model.dim, dtype=complex) / model.dim
        traj = evolve(model, rho0, 50.0 / pmin)
        result = steady_state(model, liouvillian=builder(model))
        worst = max(worst, _trace_distance(traj.final_state, result.rho))
    return CheckResult(
        "steady_state_matches_time_evolution",
        worst <= 1e-6 * scale,
        f"max trace distance = {worst:.2e}",
    )


def _check_loop_oracles(scale: float, _builder) -> CheckResult:
    from .tensors import SpaceShape, partial_trace

    rng = np.random.default_rng(99)
    worst = 0.0
    for dims in [(2, 2, 2), (2, 3, 2), (2, 3)]:
        shape = SpaceShape(dims)
        rho = _random_state(rng, shape.total_dim)
        for i in range(len(dims)):
            got = partial_trace(rho, i, shape)
            ref = _loop_partial_trace(rho, dims, i)
            worst = max(worst, float(np.max(np.abs(got - ref))))
    models = _canonical_models()
    for model in models:
        rho = _random_state(rng, model.dim)
        for i, particle in enumerate(model.particles):
            for ch in particle.bath:
                if ch.kind != FULL_RESET:
                    continue
                got = dissipator(ch, i, rho, model)
                ref = _loop_reset_dissipator(
                    rho, model.shape.dims, i, particle.energies, ch.temperature, ch.rate
                )
                worst = max(worst, float(np.max(np.abs(got - ref))))
    return CheckResult(
        "index_loop_oracles",
        worst <= 1e-12 * scale,
        f"max deviation from loop oracles = {worst:.2e}",
    )


def _check_trajectory_invariants(scale: float, _builder) -> CheckResult:
    model = two_qubit_fridge(1.0, 2.5, 1.0, 5.0, 0.2, 0.2, 0.2, 0.2)
    taus = [np.diag([0.7, 0.3]), np.diag([0.6, 0.4]), np.diag([0.5, 0.5])]
    rho0 = np.kron(np.kron(taus[0], taus[1]), taus[2]).astype(complex)
    traj = evolve(model, rho0, 60.0, n_samples=50)
    trace_err = max(abs(float(np.real(np.trace(s))) - 1.0) for s in traj.states)
    min_eig = min(float(np.linalg.eigvalsh((s + s.conj().T) / 2)[0]) for s in traj.states)
    passed = trace_err <= 1e-9 * scale and min_eig >= -1e-9 * scale
    return CheckResult(
        "trajectory_trace_and_positivity",
        passed,
        f"max trace defect = {trace_err:.2e}, min eigenvalue = {min_eig:.2e}",
    )


_CHECKS = [
    _check_commutators,
    _check_loop_oracles,
    _check_generator_agreement,
    _check_equilibrium,
    _check_energy_balance,
    _check_trajectory_invariants,
    _check_oracle_equivalence,
]


def run_checks(tol: float = STATIONARITY_TOL,
               liouvillian_builder: Callable[[FridgeModel], Liouvillian] = build_liouvillian,
               ) -> list[CheckResult]:
    """Run the invariant suite; thresholds scale with ``tol`` uniformly."""
    scale = tol / STATIONARITY_TOL
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for check in _CHECKS:
            results.append(check(scale, liouvillian_builder))
    return results
