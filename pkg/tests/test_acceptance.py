"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.
"""

import contextlib
import math

import numpy as np
import pytest

from qfridge.dynamics import evolve, steady_state
from qfridge.experiments import (
    SweepConfig,
    extrapolate_p1_limit,
    figure_curves,
    preset,
    run_sweep,
    zeno_scan,
)
from qfridge.models import (
    FULL_RESET,
    TRANSITION_JUMP,
    qubit_qutrit_fridge,
    single_qutrit_fridge,
    thermal_state,
    two_qubit_fridge,
)
from qfridge.observables import (
    heat_currents,
    particle_temperatures,
    perfect_insulation_limit,
)
from qfridge.tensors import SpaceShape, partial_trace
from qfridge.models import dissipator

from oracles import (
    loop_jump_dissipator,
    loop_partial_trace,
    loop_reset_dissipator,
    random_density,
    trace_distance,
)

pytestmark = pytest.mark.filterwarnings(
    "ignore::qfridge.models.ValidityRegimeWarning",
    "ignore::qfridge.dynamics.DegenerateStationaryWarning",
)

P1_SEQUENCE = (1e-5, 3e-6, 1e-6, 3e-7, 1e-7)


@contextlib.contextmanager
def criterion(num: int, description: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num:2d} {description}: FAIL")
        raise
    print(f"ACCEPTANCE {num:2d} {description}: PASS")


def cold_qubit_temperature(model) -> float:
    return particle_temperatures(model, steady_state(model).rho)[0].value


def insulation_config(e1, e2, t_cold, t_hot, p2, p3, g) -> SweepConfig:
    return SweepConfig(
        "two_qubit",
        dict(e1=e1, e2=e2, t_cold=t_cold, t_hot=t_hot, p2=p2, p3=p3, g=g),
        "p1",
        P1_SEQUENCE,
    )


def test_criterion_1_perfect_insulation_reference_values():
    targets = {4.0: 0.400, 8.0: 0.36364, 12.0: 0.35294}
    with criterion(1, "perfect-insulation limits 0.400 / 0.364 / 0.353"):
        for t_hot, target in targets.items():
            cfg = insulation_config(1.0, 3.0, 1.0, t_hot, 1e-3, 1e-3, 1e-3)
            res = extrapolate_p1_limit(cfg, P1_SEQUENCE)
            assert res.converged
            assert abs(res.limit - target) / target < 5e-3


def test_criterion_2_closed_form_agreement_random_parameters():
    rng = np.random.default_rng(2718)
    with criterion(2, "closed-form agreement on 20 random parameter sets"):
        for _ in range(20):
            e1 = rng.uniform(0.5, 2.0)
            e3 = e1 * rng.uniform(0.5, 3.0)
            t_cold = rng.uniform(0.5, 2.0)
            t_hot = t_cold * rng.uniform(2.0, 10.0)
            p = 1e-3 * e1
            target = perfect_insulation_limit(t_cold, t_hot, e1, e3)

            seq = tuple(p * s for s in (1e-2, 3e-3, 1e-3, 3e-4, 1e-4))
            base_cfg = insulation_config(e1, e1 + e3, t_cold, t_hot, p, p, p)
            base = extrapolate_p1_limit(base_cfg, seq).limit
            assert abs(base - target) / target < 5e-3

            # the limit must not care which weak coupling got it there
            for bump in ({"g": 3 * p}, {"p2": 3 * p}, {"p3": 3 * p}):
                fixed = dict(base_cfg.fixed)
                fixed.update(bump)
                varied = extrapolate_p1_limit(
                    SweepConfig("two_qubit", fixed, "p1", seq), seq
                ).limit
                assert abs(varied - base) / base < 5e-3


def equilibrium_models(t):
    return [
        two_qubit_fridge(1.0, 3.0, t, t, 1e-3, 1e-3, 1e-3, 1e-3),
        qubit_qutrit_fridge(1.0, 1.0, t, t, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3),
        single_qutrit_fridge(1.0, 1.0, t, t, t, 1e-3, 1e-3, 1e-3, 1e-3),
    ]


def test_criterion_3_equilibrium_fixed_point():
    with criterion(3, "equilibrium fixed point for all three models"):
        for t in (1.0, 1.7):
            for model in equilibrium_models(t):
                res = steady_state(model)
                t1 = particle_temperatures(model, res.rho)[0].value
                assert abs(t1 - t) < 1e-9
                assert np.max(np.abs(heat_currents(model, res.rho))) < 1e-12


def test_criterion_4_heat_current_sign_law():
    with criterion(4, "heat current changes sign exactly at the cooling crossover"):
        t_bath = 1.0
        temps, currents = [], []
        for t_hot in np.linspace(0.4, 6.0, 15):
            model = two_qubit_fridge(1.0, 3.0, t_bath, t_hot, 1e-3, 1e-3, 1e-3, 1e-3)
            res = steady_state(model)
            temps.append(particle_temperatures(model, res.rho)[0].value)
            currents.append(heat_currents(model, res.rho)[0])
        for t1, q1 in zip(temps, currents):
            if abs(t1 - t_bath) > 1e-10:
                assert math.copysign(1.0, q1) == math.copysign(1.0, t_bath - t1)
        cooling = np.asarray(temps) < t_bath
        positive = np.asarray(currents) > 0
        np.testing.assert_array_equal(cooling, positive)


def test_criterion_5_energy_balance_along_sweeps():
    with criterion(5, "energy balance at every sampled steady state"):
        configs = [
            preset("fig1"),
            preset("fig6"),
            SweepConfig(
                "single_qutrit",
                dict(e1=1.0, e2=1.2, t_cold=1.0, t_room=1.1, p1=1e-3, p_hot=2e-3,
                     p_room=1e-3, g=1e-3),
                "t_hot",
                tuple(np.linspace(1.0, 8.0, 8)),
            ),
        ]
        for cfg in configs:
            table = run_sweep(cfg)
            n = 3 if cfg.model_tag != "single_qutrit" else 2
            total = sum(table.column(f"Q{i + 1}") for i in range(n))
            assert np.max(np.abs(total)) < 1e-9


def _random_fast_model(rng, tag):
    p = lambda: rng.uniform(0.25, 0.45)
    g = lambda: rng.uniform(0.15, 0.35)
    t_cold = rng.uniform(0.8, 1.5)
    t_hot = rng.uniform(3.0, 6.0)
    if tag == "two_qubit":
        e1 = rng.uniform(0.8, 1.5)
        return two_qubit_fridge(e1, e1 + rng.uniform(0.6, 1.5), t_cold, t_hot,
                                p(), p(), p(), g())
    if tag == "qubit_qutrit":
        return qubit_qutrit_fridge(rng.uniform(0.8, 1.5), rng.uniform(0.8, 1.5),
                                   t_cold, t_hot, p(), p(), p(), g(), g())
    return single_qutrit_fridge(rng.uniform(0.8, 1.5), rng.uniform(0.8, 1.5),
                                t_cold, rng.uniform(0.9, 1.6), t_hot,
                                p(), p(), p(), g())


def test_criterion_6_oracle_equivalence():
    rng = np.random.default_rng(31415)
    with criterion(6, "null-space steady state matches RK4 evolution (10 sets/model)"):
        for tag in ("two_qubit", "qubit_qutrit", "single_qutrit"):
            for _ in range(10):
                model = _random_fast_model(rng, tag)
                p_min = min(ch.rate for part in model.particles for ch in part.bath)
                rho0 = np.eye(model.dim, dtype=complex) / model.dim
                traj = evolve(model, rho0, 50.0 / p_min, n_samples=1)
                res = steady_state(model)
                assert trace_distance(traj.final_state, res.rho) < 1e-6


def test_criterion_7_zeno_non_monotonicity():
    with criterion(7, "interior Zeno minimum in both fridge reset rates"):
        for cfg in figure_curves("fig3"):
            res = zeno_scan(cfg)
            assert res.interior
            temps = res.table.column("T1_s")
            assert temps[0] > res.argmin_temperature
            assert temps[-1] > res.argmin_temperature


def test_criterion_8_absolute_zero_scaling():
    with criterion(8, "two-decade spiral-gap sweep cools below 10% of start"):
        table = run_sweep(preset("fig4"))
        temps = table.column("T1_s")
        values = preset("fig4").values
        assert values[-1] / values[0] == pytest.approx(100.0)
        assert np.all(np.diff(temps) < 0)
        assert temps[-1] < 0.1 * temps[0]


def test_criterion_9_qubit_qutrit_parity():
    with criterion(9, "qubit-qutrit machine cools iff the hot bath is hotter"):
        table = run_sweep(preset("fig6"))
        th = table.column("t_hot")
        t1 = table.column("T1_s")
        t_cold = 1.0
        assert t1[0] == pytest.approx(t_cold, abs=1e-9)  # th == t_cold row
        assert np.all(t1[th > t_cold] < t_cold)
        assert np.all(np.diff(t1) < 1e-12)  # same downward shape as the two-qubit curve
        hot_below = qubit_qutrit_fridge(1.0, 1.0, t_cold, 0.5, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3)
        assert cold_qubit_temperature(hot_below) > t_cold


def test_criterion_10_structural_invariants():
    rng = np.random.default_rng(64)
    models = [
        two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, 1e-3),
        qubit_qutrit_fridge(1.0, 1.3, 1.0, 4.0, 1e-3, 2e-3, 3e-3, 1e-3, 2e-3),
        single_qutrit_fridge(1.0, 1.3, 1.0, 1.1, 4.0, 1e-3, 2e-3, 3e-3, 1e-3),
    ]
    with criterion(10, "structural invariants and brute-force oracles"):
        # designed degeneracy
        for model in models:
            comm = model.h0 @ model.h_int - model.h_int @ model.h0
            assert np.max(np.abs(comm)) < 1e-12

        # state health along a trajectory
        strong = two_qubit_fridge(1.0, 2.5, 1.0, 5.0, 0.2, 0.2, 0.2, 0.2)
        taus = [thermal_state(p, p.bath[0].temperature) for p in strong.particles]
        rho0 = np.kron(np.kron(taus[0], taus[1]), taus[2])
        traj = evolve(strong, rho0, 40.0, n_samples=40)
        for state in traj.states:
            assert abs(np.trace(state).real - 1.0) < 1e-9
            assert np.max(np.abs(state - state.conj().T)) < 1e-12
            assert np.linalg.eigvalsh((state + state.conj().T) / 2)[0] > -1e-9

        # index-loop oracles on all three tensor shapes
        for dims in [(2, 2, 2), (2, 3, 2), (2, 3)]:
            shape = SpaceShape(dims)
            rho = random_density(rng, shape.total_dim)
            for i in range(len(dims)):
                np.testing.assert_allclose(
                    partial_trace(rho, i, shape),
                    loop_partial_trace(rho, dims, i),
                    atol=1e-14,
                )
        for model in models:
            rho = random_density(rng, model.dim)
            for i, particle in enumerate(model.particles):
                for ch in particle.bath:
                    got = dissipator(ch, i, rho, model)
                    if ch.kind == FULL_RESET:
                        ref = loop_reset_dissipator(
                            rho, model.shape.dims, i, particle.energies,
                            ch.temperature, ch.rate,
                        )
                    else:
                        ref = loop_jump_dissipator(
                            rho, model.shape.dims, i, particle.energies,
                            ch.transition, ch.temperature, ch.rate,
                        )
                    np.testing.assert_allclose(got, ref, atol=1e-14)
