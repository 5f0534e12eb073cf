"""Generator assembly, stationary states, and time evolution.

Vectorization is column-stacking throughout: ``vec(rho)`` stacks the columns
of ``rho``, so ``vec(A rho B) = (B^T (x) A) vec(rho)``.  The Hamiltonian part
of the generator is therefore ``-i (I (x) H - H^T (x) I)``.

Two independent routes to the same physics live here on purpose:

* :func:`build_liouvillian` assembles the dense superoperator matrix from
  Kronecker-product identities (reset channels enter through their Kraus
  operators ``sqrt(tau_c) |c><b|``);
* :func:`master_rhs` evaluates the equation of motion directly on the matrix,
  with commutators and the per-channel dissipators.

:func:`steady_state` solves the null space of the first; :func:`evolve`
integrates the second; tests hold them against each other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .models import FULL_RESET, FridgeModel, jump_rates, thermal_state
from .tensors import DensityDiagnostics, check_density, embed

STATIONARITY_TOL = 1e-10
UNIQUENESS_GAP_WARN = 1e-8


class NonUniqueStationaryStateError(ValueError):
    """The generator has no dissipation, so the stationary state is not unique."""


class DegenerateStationaryWarning(UserWarning):
    """The second-smallest singular value of the generator is suspiciously small."""


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v, dtype=complex).reshape((dim, dim), order="F")


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Dense generator acting on column-vectorized states."""

    dim: int
    matrix: np.ndarray

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)


def _left_mult(a: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(a.shape[0]), a)


def _right_mult(b: np.ndarray) -> np.ndarray:
    return np.kron(b.T, np.eye(b.shape[0]))


def _sandwich(k: np.ndarray) -> np.ndarray:
    # vec(K rho K^dag) = (conj(K) (x) K) vec(rho)
    return np.kron(k.conj(), k)


def _jump_superop(lop: np.ndarray) -> np.ndarray:
    ldl = lop.conj().T @ lop
    return _sandwich(lop) - 0.5 * (_left_mult(ldl) + _right_mult(ldl))


def build_liouvillian(model: FridgeModel) -> Liouvillian:
    """Assemble the full generator as a dim^2 x dim^2 matrix."""
    n = model.dim
    shape = model.shape
    h = model.hamiltonian
    lmat = -1j * (_left_mult(h) - _right_mult(h))

    for i, particle in enumerate(model.particles):
        for channel in particle.bath:
            if channel.rate == 0.0:
                continue
            if channel.kind == FULL_RESET:
                tau = thermal_state(particle, channel.temperature)
                pops = np.real(np.diag(tau))
                reset = np.zeros((n * n, n * n), dtype=complex)
                d = particle.levels
                for c in range(d):
                    if pops[c] == 0.0:
                        continue
                    for b in range(d):
                        op = np.zeros((d, d), dtype=complex)
                        op[c, b] = math.sqrt(pops[c])
                        k = embed(op, i, shape)
                        reset += _sandwich(k)
                lmat += channel.rate * (reset - np.eye(n * n))
            else:
                a, b = channel.transition
                down, up = jump_rates(channel, particle)
                low = np.zeros((particle.levels,) * 2, dtype=complex)
                low[a, b] = 1.0
                lower = embed(low, i, shape)
                lmat += down * _jump_superop(lower) + up * _jump_superop(lower.conj().T)
    return Liouvillian(n, lmat)


@lru_cache(maxsize=32)
def _compiled_rhs(model: FridgeModel):
    """Build a fast evaluator of the equation of motion for one model.

    Same formulas as summing :func:`qfridge.models.dissipator` over channels,
    with per-channel constants (thermal populations, embedded jump operators,
    axis groupings) precomputed once.  Cached per model instance; the cache
    keeps the key alive, so identity-based lookup is safe.
    """
    n = model.dim
    dims = model.shape.dims
    h = model.hamiltonian.copy()

    resets = []  # (rate, populations, left, d, right)
    jumps = []  # (rate, jump_op, jump_op^dag, jump_op^dag jump_op)
    for i, particle in enumerate(model.particles):
        left = int(np.prod(dims[:i], initial=1))
        right = int(np.prod(dims[i + 1:], initial=1))
        for channel in particle.bath:
            if channel.rate == 0.0:
                continue
            if channel.kind == FULL_RESET:
                pops = np.real(np.diag(thermal_state(particle, channel.temperature)))
                resets.append((channel.rate, pops, left, particle.levels, right))
            else:
                a, b = channel.transition
                down, up = jump_rates(channel, particle)
                op = np.zeros((particle.levels,) * 2, dtype=complex)
                op[a, b] = 1.0
                lower = embed(op, i, model.shape)
                raise_ = lower.conj().T
                for rate, lop in ((down, lower), (up, raise_)):
                    if rate != 0.0:
                        jumps.append((rate, lop, lop.conj().T, lop.conj().T @ lop))

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = -1j * (h @ rho - rho @ h)
        for rate, pops, left, d, right in resets:
            t = rho.reshape(left, d, right, left, d, right)
            red = np.trace(t, axis1=1, axis2=4)
            ins = np.zeros_like(t)
            for a in range(d):
                ins[:, a, :, :, a, :] = pops[a] * red
            out += rate * (ins.reshape(n, n) - rho)
        for rate, lop, lop_dag, ldl in jumps:
            out += rate * (lop @ rho @ lop_dag) - (0.5 * rate) * (ldl @ rho + rho @ ldl)
        return out

    return rhs


def master_rhs(model: FridgeModel, rho: np.ndarray) -> np.ndarray:
    """Right-hand side of the equation of motion, evaluated on the matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"state shape {rho.shape} does not match dimension {model.dim}")
    return _compiled_rhs(model)(rho)


def _total_rates(model: FridgeModel) -> list[float]:
    return [ch.rate for p in model.particles for ch in p.bath]


@dataclass(frozen=True, eq=False)
class SteadyStateResult:
    """Stationary state with its stationarity residual and uniqueness gap."""

    rho: np.ndarray
    residual: float
    uniqueness_gap: float


def steady_state(model: FridgeModel, tol: float = STATIONARITY_TOL,
                 liouvillian: Liouvillian | None = None) -> SteadyStateResult:
    """Solve ``L vec(rho) = 0`` with unit trace, by least squares.

    The trace condition is appended as an extra row to the stacked system,
    which stays well behaved in the nearly-degenerate spectra that show up
    as the cold particle's reset rate goes to zero.  A pre-built (or
    deliberately modified) generator may be passed in place of the model's
    own.
    """
    if not any(r > 0 for r in _total_rates(model)):
        raise NonUniqueStationaryStateError(
            "all bath rates vanish; every state commuting with H is stationary"
        )
    lio = liouvillian if liouvillian is not None else build_liouvillian(model)
    n = model.dim
    trace_row = vec(np.eye(n)).conj()[None, :]
    a = np.vstack([lio.matrix, trace_row])
    b = np.zeros(n * n + 1, dtype=complex)
    b[-1] = 1.0
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = unvec(sol, n)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / np.real(np.trace(rho))

    residual = float(np.max(np.abs(lio.apply(rho))))
    sv = np.linalg.svd(lio.matrix, compute_uv=False)
    gap = float(sv[-2])
    if gap < UNIQUENESS_GAP_WARN:
        warnings.warn(
            f"uniqueness gap {gap:.3e} below {UNIQUENESS_GAP_WARN:g}; "
            "the stationary manifold may be degenerate",
            DegenerateStationaryWarning,
            stacklevel=2,
        )
    if residual > tol:
        warnings.warn(
            f"stationarity residual {residual:.3e} above tolerance {tol:g}",
            DegenerateStationaryWarning,
            stacklevel=2,
        )
    return SteadyStateResult(rho, residual, gap)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled density-matrix trajectory from :func:`evolve`."""

    times: np.ndarray
    states: np.ndarray
    final_defects: DensityDiagnostics

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _spectral_norm(h: np.ndarray) -> float:
    return float(np.linalg.norm(h, ord=2))


def evolve(model: FridgeModel, rho0: np.ndarray, t_final: float,
           dt: float | None = None, n_samples: int = 200) -> Trajectory:
    """Fixed-step classical RK4 integration of the master equation.

    The step must resolve the fastest coherent oscillation: ``dt`` above
    ``0.1 / ||H||`` is halved (with a warning) until it complies.  The exact
    stationary state is a fixed point of the RK4 map, so long horizons
    converge onto it rather than accumulating phase error.
    """
    rho = np.asarray(rho0, dtype=complex).copy()
    if rho.shape != (model.dim, model.dim):
        raise ValueError(f"initial state shape {rho.shape} does not match dim {model.dim}")
    if t_final <= 0:
        raise ValueError("t_final must be positive")

    hnorm = _spectral_norm(model.hamiltonian)
    dt_max = 0.1 / hnorm if hnorm > 0 else t_final
    if dt is None:
        dt = min(dt_max, t_final)
    elif dt > dt_max:
        while dt > dt_max:
            dt /= 2.0
        warnings.warn(
            f"time step too coarse for ||H|| = {hnorm:g}; halved to {dt:g}",
            UserWarning,
            stacklevel=2,
        )
    n_steps = max(1, math.ceil(t_final / dt))
    dt = t_final / n_steps
    stride = max(1, n_steps // max(1, n_samples))

    rhs = _compiled_rhs(model)
    times = [0.0]
    states = [rho.copy()]
    for step in range(1, n_steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % stride == 0 or step == n_steps:
            times.append(step * dt)
            states.append(rho.copy())

    return Trajectory(np.asarray(times), np.asarray(states), check_density(rho))
