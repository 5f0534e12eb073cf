"""Physics read-outs: effective temperatures, heat currents, cooling limits.

Effective temperatures come from the diagonal populations of reduced states.
In the weak-coupling regime these stay in Gibbs form, so for a qubit the
log-ratio of populations inverts the thermal distribution exactly; for a
qutrit a single temperature is fitted across both gaps.  The
``thermality_defect`` reports how far the reduced state actually is from the
best diagonal Gibbs state instead of hiding the approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import FridgeModel, ParticleSpec, dissipator
from .tensors import SpaceShape, embed, partial_trace

_POP_FLOOR = 1e-300


@dataclass(frozen=True)
class TemperatureReading:
    """Effective temperature of one particle.

    ``value`` is signed: population inversion gives a negative temperature
    (flagged, not an error), equal populations give ``inf``.
    """

    value: float
    gap_used: float
    thermality_defect: float
    flags: tuple[str, ...] = ()


def _gibbs_populations(energies: np.ndarray, beta: float) -> np.ndarray:
    # anchor the exponent at the extreme level so weights never overflow
    anchor = energies.min() if beta >= 0 else energies.max()
    w = np.exp(-beta * (energies - anchor))
    return w / w.sum()


def _fit_beta(populations: np.ndarray, energies: np.ndarray, beta0: float) -> float:
    """Least-squares fit of an inverse temperature to diagonal populations."""

    def objective(beta: float) -> float:
        return float(np.sum((populations - _gibbs_populations(energies, beta)) ** 2))

    def derivative(beta: float, h: float = 1e-7) -> float:
        return (objective(beta + h) - objective(beta - h)) / (2 * h)

    beta = beta0
    for _ in range(100):
        d1 = derivative(beta)
        h = 1e-6 * max(1.0, abs(beta))
        d2 = (derivative(beta + h) - derivative(beta - h)) / (2 * h)
        if d2 <= 0 or not math.isfinite(d2):
            break
        step = d1 / d2
        beta -= step
        if abs(step) < 1e-13 * max(1.0, abs(beta)):
            break
    return beta


def temperature_of(reduced_rho: np.ndarray, particle: ParticleSpec) -> TemperatureReading:
    """Invert the Gibbs form of a reduced state to a temperature reading."""
    rho = np.asarray(reduced_rho, dtype=complex)
    d = particle.levels
    if rho.shape != (d, d):
        raise ValueError(f"reduced state shape {rho.shape} does not match {d} levels")
    energies = np.asarray(particle.energies)
    pops = np.real(np.diag(rho))
    gap = float(energies[-1] - energies[0])
    offdiag = rho - np.diag(np.diag(rho))
    coherence = float(np.linalg.norm(offdiag))

    flags: list[str] = []
    if float(np.min(pops)) < -1e-9:
        # not a state; report rather than crash (diagnostics run on whatever
        # a solver produced)
        return TemperatureReading(math.nan, gap, math.inf, ("invalid_state",))
    if pops[1:].max() <= _POP_FLOOR:
        # population frozen in the ground state: the zero-temperature limit
        defect = math.sqrt(float(np.sum((pops - np.eye(d)[0]) ** 2)) + coherence**2)
        return TemperatureReading(0.0, gap, defect, ("exact_ground",))

    if d == 2:
        q0, q1 = np.maximum(pops, _POP_FLOOR)
        if q0 == q1:
            value = math.inf
            flags.append("infinite")
        else:
            value = gap / math.log(q0 / q1)
        beta = 0.0 if not math.isfinite(value) else 1.0 / value
        fit = _gibbs_populations(energies, beta)
        defect = math.sqrt(float(np.sum((pops - fit) ** 2)) + coherence**2)
        if value < 0:
            flags.append("inverted")
        return TemperatureReading(float(value), gap, defect, tuple(flags))

    # qutrit: start from the best-conditioned pair, refine across both gaps
    safe = np.maximum(pops, _POP_FLOOR)
    beta0 = math.log(safe[0] / safe[-1]) / gap
    beta = _fit_beta(pops, energies, beta0)
    fit = _gibbs_populations(energies, beta)
    defect = math.sqrt(float(np.sum((pops - fit) ** 2)) + coherence**2)
    if beta == 0.0:
        value = math.inf
        flags.append("infinite")
    else:
        value = 1.0 / beta
        if value < 0:
            flags.append("inverted")
    return TemperatureReading(float(value), gap, defect, tuple(flags))


def reduced_state(model: FridgeModel, rho: np.ndarray, particle_index: int) -> np.ndarray:
    """Reduced density matrix of one particle."""
    dims = list(model.shape.dims)
    reduced = np.asarray(rho, dtype=complex)
    for j in reversed(range(len(dims))):
        if j != particle_index:
            reduced = partial_trace(reduced, j, SpaceShape(dims))
            dims.pop(j)
    return reduced


def particle_temperatures(model: FridgeModel, rho: np.ndarray) -> list[TemperatureReading]:
    """Temperature reading of every particle's reduced state."""
    return [
        temperature_of(reduced_state(model, rho, i), particle)
        for i, particle in enumerate(model.particles)
    ]


def heat_currents(model: FridgeModel, rho: np.ndarray) -> np.ndarray:
    """Heat current into each particle from its bath(s).

    ``Q_i = Tr(H_i D_i(rho))`` with ``H_i`` the particle's local free
    Hamiltonian and ``D_i`` the sum of its channels.  Positive current means
    heat flows from the bath into the system.
    """
    rho = np.asarray(rho, dtype=complex)
    currents = np.zeros(model.shape.n_particles)
    for i, particle in enumerate(model.particles):
        h_i = embed(particle.local_hamiltonian(), i, model.shape)
        d_rho = np.zeros_like(rho)
        for channel in particle.bath:
            if channel.rate != 0.0:
                d_rho += dissipator(channel, i, rho, model)
        currents[i] = float(np.real(np.trace(h_i @ d_rho)))
    return currents


def perfect_insulation_limit(t_cold: float, t_hot: float, e1: float, e3: float) -> float:
    """Stationary cold-qubit temperature at perfect insulation.

    Closed form ``T_c / (1 + (e3/e1) (1 - T_c/T_hot))``: the limit of the
    two-qubit machine as the cold qubit's reset rate goes to zero, with both
    fridge particles still coupled (their rates and the interaction strength
    drop out of the limit).
    """
    if t_cold <= 0 or t_hot <= 0:
        raise ValueError("temperatures must be positive")
    if e1 <= 0 or e3 < 0:
        raise ValueError("need e1 > 0 and e3 >= 0")
    ratio = 0.0 if math.isinf(t_hot) else t_cold / t_hot
    denom = 1.0 + (e3 / e1) * (1.0 - ratio)
    if denom <= 0:
        raise ValueError(
            "outside the formula's cooling regime (cold bath too hot relative to t_hot)"
        )
    return t_cold / denom
