"""Construction of the three self-contained refrigerator models.

Units: hbar = k_B = 1, so energies and temperatures share one unit and time
is inverse energy.  Each model is a :class:`FridgeModel`: a list of two- or
three-level particles with bath channels, a diagonal free Hamiltonian, and an
interaction that only couples degenerate configurations (so the swap it
mediates costs no work and ``[H0, Hint] = 0``).

Bath contact comes in two kinds:

``full_reset``
    At rate ``p`` the particle is replaced by the thermal state of its bath:
    ``D(rho) = p * (tau (x) Tr_i rho - rho)``.

``transition_jump``
    A detailed-balance pair of jump operators on one transition ``(a, b)``:
    downward rate ``p * (nbar + 1)``, upward rate ``p * nbar`` with
    ``nbar = 1/(exp(dE/T) - 1)``.  Used for a particle whose individual levels
    touch baths at different temperatures (the single-qutrit machine), where
    a single-temperature reset has no consistent fixed point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .tensors import SpaceShape, embed, insert_factor, partial_trace

FULL_RESET = "full_reset"
TRANSITION_JUMP = "transition_jump"

# Eq. of motion is only consistent for couplings and rates well below the
# level spacings; builders warn past this fraction of the smallest gap.
VALIDITY_FRACTION = 0.1


class ValidityRegimeWarning(UserWarning):
    """Coupling or reset rate is not small compared to the level spacing."""


@dataclass(frozen=True)
class BathChannel:
    """One contact between a particle and a thermal bath."""

    kind: str
    temperature: float
    rate: float
    transition: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in (FULL_RESET, TRANSITION_JUMP):
            raise ValueError(f"unknown bath channel kind {self.kind!r}")
        if self.rate < 0:
            raise ValueError(f"bath rate must be >= 0, got {self.rate}")
        if not (self.temperature > 0):
            raise ValueError(f"bath temperature must be positive, got {self.temperature}")
        if self.kind == FULL_RESET and self.transition is not None:
            raise ValueError("full_reset channels take no transition pair")
        if self.kind == TRANSITION_JUMP:
            if self.transition is None:
                raise ValueError("transition_jump channels need a level pair (a, b)")
            a, b = self.transition
            if not a < b:
                raise ValueError(f"transition pair must be ordered a < b, got {self.transition}")


@dataclass(frozen=True)
class ParticleSpec:
    """A single qubit or qutrit: level energies (ground = 0) and its baths."""

    energies: tuple[float, ...]
    bath: tuple[BathChannel, ...] = ()

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        object.__setattr__(self, "energies", energies)
        object.__setattr__(self, "bath", tuple(self.bath))
        if len(energies) not in (2, 3):
            raise ValueError(f"particles are qubits or qutrits, got {len(energies)} levels")
        if energies[0] != 0.0:
            raise ValueError("ground level must sit at zero energy")
        if any(b <= a for a, b in zip(energies, energies[1:])):
            raise ValueError(f"level energies must be strictly increasing, got {energies}")
        for ch in self.bath:
            if ch.transition is not None and ch.transition[1] >= len(energies):
                raise ValueError(f"transition {ch.transition} outside {len(energies)} levels")

    @property
    def levels(self) -> int:
        return len(self.energies)

    @property
    def min_gap(self) -> float:
        return min(b - a for a, b in zip(self.energies, self.energies[1:]))

    def local_hamiltonian(self) -> np.ndarray:
        return np.diag(np.asarray(self.energies, dtype=complex))


@dataclass(frozen=True)
class InteractionTerm:
    """``coupling * (|ket><bra| + h.c.)`` between two joint configurations."""

    coupling: float
    bra_config: tuple[int, ...]
    ket_config: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bra_config", tuple(self.bra_config))
        object.__setattr__(self, "ket_config", tuple(self.ket_config))
        if self.bra_config == self.ket_config:
            raise ValueError("interaction must couple two distinct configurations")


@dataclass(frozen=True, eq=False)
class FridgeModel:
    """Immutable description of one machine plus its assembled Hamiltonians."""

    shape: SpaceShape
    particles: tuple[ParticleSpec, ...]
    interactions: tuple[InteractionTerm, ...]
    h0: np.ndarray
    h_int: np.ndarray
    model_tag: str = "custom"

    @property
    def dim(self) -> int:
        return self.shape.total_dim

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h0 + self.h_int

    def min_gap(self) -> float:
        return min(p.min_gap for p in self.particles)


@lru_cache(maxsize=None)
def _thermal_populations(energies: tuple[float, ...], temperature: float) -> tuple[float, ...]:
    if math.isinf(temperature):
        n = len(energies)
        return (1.0 / n,) * n
    if temperature <= 0:
        raise ValueError(f"temperature must be positive or +inf, got {temperature}")
    weights = np.exp(-np.asarray(energies) / temperature)
    weights /= weights.sum()
    return tuple(float(w) for w in weights)


def thermal_state(particle: ParticleSpec, temperature: float) -> np.ndarray:
    """Gibbs state of one particle: populations proportional to exp(-E/T)."""
    return np.diag(np.asarray(_thermal_populations(particle.energies, temperature), dtype=complex))


def _assemble(particles: Sequence[ParticleSpec], interactions: Iterable[InteractionTerm],
              model_tag: str) -> FridgeModel:
    particles = tuple(particles)
    interactions = tuple(interactions)
    shape = SpaceShape([p.levels for p in particles])
    n = shape.total_dim

    h0 = np.zeros((n, n), dtype=complex)
    for i, p in enumerate(particles):
        h0 += embed(p.local_hamiltonian(), i, shape)

    h_int = np.zeros((n, n), dtype=complex)
    for term in interactions:
        i = shape.index_of(term.ket_config)
        j = shape.index_of(term.bra_config)
        h_int[i, j] += term.coupling
        h_int[j, i] += term.coupling

    model = FridgeModel(shape, particles, interactions, h0, h_int, model_tag)
    _warn_outside_validity_regime(model)
    return model


def _warn_outside_validity_regime(model: FridgeModel) -> None:
    gap = model.min_gap()
    threshold = VALIDITY_FRACTION * gap
    couplings = [abs(t.coupling) for t in model.interactions]
    rates = [ch.rate for p in model.particles for ch in p.bath]
    if any(g >= threshold for g in couplings if g > 0) or any(r >= threshold for r in rates if r > 0):
        warnings.warn(
            f"couplings/rates not small against the minimum level gap {gap:g}; "
            "the reset master equation is only consistent for weak coupling",
            ValidityRegimeWarning,
            stacklevel=3,
        )


def _check_rates(*rates: float) -> None:
    for r in rates:
        if r < 0:
            raise ValueError(f"rates must be >= 0, got {r}")


def two_qubit_fridge(e1: float, e2: float, t_cold: float, t_hot: float,
                     p1: float, p2: float, p3: float, g: float,
                     t_room: float | None = None) -> FridgeModel:
    """Three qubits: target (gap ``e1``), spiral (``e2``), engine (``e2 - e1``).

    The engine gap makes ``|010>`` and ``|101>`` degenerate, and the
    interaction ``g`` swaps exactly that pair.  Particles 1 and 2 sit in the
    cold/room bath (``t_room`` defaults to ``t_cold``), particle 3 in the hot
    one.
    """
    if e1 <= 0:
        raise ValueError(f"e1 must be positive, got {e1}")
    if e2 <= e1:
        raise ValueError(f"need e2 > e1 for a degenerate pair to exist, got e1={e1}, e2={e2}")
    if g < 0:
        raise ValueError(f"coupling g must be >= 0, got {g}")
    _check_rates(p1, p2, p3)
    if t_room is None:
        t_room = t_cold
    e3 = e2 - e1
    particles = (
        ParticleSpec((0.0, e1), (BathChannel(FULL_RESET, t_cold, p1),)),
        ParticleSpec((0.0, e2), (BathChannel(FULL_RESET, t_room, p2),)),
        ParticleSpec((0.0, e3), (BathChannel(FULL_RESET, t_hot, p3),)),
    )
    terms = (InteractionTerm(g, (1, 0, 1), (0, 1, 0)),) if g > 0 else ()
    return _assemble(particles, terms, "two_qubit")


def qubit_qutrit_fridge(e1: float, e2: float, t_cold: float, t_hot: float,
                        p1: float, p2: float, p3: float, g: float, h: float) -> FridgeModel:
    """Qubit-qutrit machine with nearest-neighbour pair couplings only.

    Qutrit levels ``(0, e2, e1 + e2)`` make ``|020>``, ``|110>`` and ``|101>``
    degenerate; coupling ``g`` swaps ``|02.> <-> |11.>`` on particles 1-2 and
    ``h`` swaps ``|.01> <-> |.10>`` on particles 2-3, so the transfer
    ``|020> <-> |101>`` appears at second order.
    """
    if e1 <= 0 or e2 <= 0:
        raise ValueError(f"energies must be positive, got e1={e1}, e2={e2}")
    if g < 0 or h < 0:
        raise ValueError(f"couplings must be >= 0, got g={g}, h={h}")
    _check_rates(p1, p2, p3)
    particles = (
        ParticleSpec((0.0, e1), (BathChannel(FULL_RESET, t_cold, p1),)),
        ParticleSpec((0.0, e2, e1 + e2), (BathChannel(FULL_RESET, t_cold, p2),)),
        ParticleSpec((0.0, e2), (BathChannel(FULL_RESET, t_hot, p3),)),
    )
    terms = []
    if g > 0:
        for x in (0, 1):
            terms.append(InteractionTerm(g, (1, 1, x), (0, 2, x)))
    if h > 0:
        for x in (0, 1):
            terms.append(InteractionTerm(h, (x, 1, 0), (x, 0, 1)))
    return _assemble(particles, terms, "qubit_qutrit")


def single_qutrit_fridge(e1: float, e2: float, t_cold: float, t_room: float, t_hot: float,
                         p1: float, p_hot: float, p_room: float, g: float) -> FridgeModel:
    """The smallest machine: one qutrit cools one qubit.

    The qutrit's transitions touch different baths: levels (0,1) exchange with
    the hot bath and (0,2) with the room bath, each as a detailed-balance jump
    pair.  ``|02>`` and ``|11>`` are degenerate at ``e1 + e2`` and the
    interaction swaps them.
    """
    if e1 <= 0 or e2 <= 0:
        raise ValueError(f"energies must be positive, got e1={e1}, e2={e2}")
    if g < 0:
        raise ValueError(f"coupling g must be >= 0, got {g}")
    _check_rates(p1, p_hot, p_room)
    particles = (
        ParticleSpec((0.0, e1), (BathChannel(FULL_RESET, t_cold, p1),)),
        ParticleSpec(
            (0.0, e2, e1 + e2),
            (
                BathChannel(TRANSITION_JUMP, t_hot, p_hot, transition=(0, 1)),
                BathChannel(TRANSITION_JUMP, t_room, p_room, transition=(0, 2)),
            ),
        ),
    )
    terms = (InteractionTerm(g, (1, 1), (0, 2)),) if g > 0 else ()
    return _assemble(particles, terms, "single_qutrit")


def custom_fridge(particles: Sequence[ParticleSpec],
                  interactions: Iterable[InteractionTerm] = ()) -> FridgeModel:
    """Assemble an arbitrary model from explicit parts (no degeneracy check)."""
    return _assemble(particles, interactions, "custom")


MODEL_BUILDERS = {
    "two_qubit": two_qubit_fridge,
    "qubit_qutrit": qubit_qutrit_fridge,
    "single_qutrit": single_qutrit_fridge,
}


@lru_cache(maxsize=None)
def _embedded_lowering(dims: tuple[int, ...], particle_index: int, a: int, b: int) -> np.ndarray:
    """``|a><b|`` on one particle, lifted to the joint space."""
    shape = SpaceShape(dims)
    d = dims[particle_index]
    op = np.zeros((d, d), dtype=complex)
    op[a, b] = 1.0
    out = embed(op, particle_index, shape)
    out.setflags(write=False)
    return out


def _lindblad_term(lop: np.ndarray, rho: np.ndarray) -> np.ndarray:
    ldl = lop.conj().T @ lop
    return lop @ rho @ lop.conj().T - 0.5 * (ldl @ rho + rho @ ldl)


def jump_rates(channel: BathChannel, particle: ParticleSpec) -> tuple[float, float]:
    """(downward, upward) rates of a transition_jump channel.

    Detailed balance fixes their ratio at exp(-dE/T); the scale is the
    channel rate.  An infinite-temperature bath degenerates to symmetric
    rates equal to the channel rate.
    """
    a, b = channel.transition
    de = particle.energies[b] - particle.energies[a]
    if math.isinf(channel.temperature):
        return channel.rate, channel.rate
    nbar = 1.0 / math.expm1(de / channel.temperature)
    return channel.rate * (nbar + 1.0), channel.rate * nbar


def dissipator(channel: BathChannel, particle_index: int, rho: np.ndarray,
               model: FridgeModel) -> np.ndarray:
    """Apply one bath channel's dissipative generator to a state."""
    shape = model.shape
    n = shape.total_dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (n, n):
        raise ValueError(f"state shape {rho.shape} does not match model dimension {n}")
    particle = model.particles[particle_index]
    if channel.rate == 0.0:
        return np.zeros((n, n), dtype=complex)

    if channel.kind == FULL_RESET:
        tau = thermal_state(particle, channel.temperature)
        reduced = partial_trace(rho, particle_index, shape)
        reset = insert_factor(tau, reduced, particle_index, shape)
        return channel.rate * (reset - rho)

    a, b = channel.transition
    down, up = jump_rates(channel, particle)
    lower = _embedded_lowering(shape.dims, particle_index, a, b)
    raise_ = _embedded_lowering(shape.dims, particle_index, b, a)
    return down * _lindblad_term(lower, rho) + up * _lindblad_term(raise_, rho)
