import math
import warnings

import numpy as np
import pytest

from qfridge.dynamics import (
    DegenerateStationaryWarning,
    NonUniqueStationaryStateError,
    build_liouvillian,
    evolve,
    master_rhs,
    steady_state,
    unvec,
    vec,
)
from qfridge.models import (
    BathChannel,
    FULL_RESET,
    ParticleSpec,
    custom_fridge,
    dissipator,
    qubit_qutrit_fridge,
    single_qutrit_fridge,
    thermal_state,
    two_qubit_fridge,
)

from oracles import random_density, trace_distance

pytestmark = pytest.mark.filterwarnings("ignore::qfridge.models.ValidityRegimeWarning")


def generic_models():
    return [
        two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, 1e-3),
        qubit_qutrit_fridge(1.0, 1.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3),
        single_qutrit_fridge(1.0, 1.0, 1.0, 1.1, 4.0, 1e-3, 1e-3, 1e-3, 1e-3),
    ]


class TestVectorization:
    def test_column_stacking(self):
        rho = np.array([[1, 2], [3, 4]], dtype=complex)
        np.testing.assert_array_equal(vec(rho), [1, 3, 2, 4])
        np.testing.assert_array_equal(unvec(vec(rho), 2), rho)


class TestLiouvillian:
    def test_pure_hamiltonian_generator(self):
        # no baths, no interaction: L is the bare commutator superoperator
        particles = (ParticleSpec((0.0, 1.0)), ParticleSpec((0.0, 2.0)))
        m = custom_fridge(particles)
        lio = build_liouvillian(m)
        h = m.h0
        expected = -1j * (np.kron(np.eye(4), h) - np.kron(h.T, np.eye(4)))
        np.testing.assert_allclose(lio.matrix, expected, atol=1e-15)
        # diagonal states are stationary under a diagonal Hamiltonian
        rho = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
        assert np.max(np.abs(lio.apply(rho))) == 0.0

    def test_global_equilibrium_is_stationary(self):
        t = 1.4
        m = two_qubit_fridge(1.0, 3.0, t, t, 1e-3, 1e-3, 1e-3, 1e-3)
        taus = [thermal_state(p, t) for p in m.particles]
        rho = np.kron(np.kron(taus[0], taus[1]), taus[2])
        lio = build_liouvillian(m)
        assert np.max(np.abs(lio.apply(rho))) < 1e-16

    @pytest.mark.parametrize("model_idx", [0, 1, 2])
    def test_matches_direct_evaluation(self, model_idx):
        m = generic_models()[model_idx]
        rng = np.random.default_rng(20 + model_idx)
        lio = build_liouvillian(m)
        for _ in range(3):
            rho = random_density(rng, m.dim)
            np.testing.assert_allclose(lio.apply(rho), master_rhs(m, rho), atol=1e-14)

    def test_linearity(self):
        m = generic_models()[0]
        rng = np.random.default_rng(21)
        lio = build_liouvillian(m)
        r1, r2 = random_density(rng, 8), random_density(rng, 8)
        a, b = 0.3 + 0.1j, -1.2 + 0.7j
        lhs = lio.matrix @ (a * vec(r1) + b * vec(r2))
        rhs = a * (lio.matrix @ vec(r1)) + b * (lio.matrix @ vec(r2))
        np.testing.assert_allclose(lhs, rhs, atol=1e-14)

    def test_trace_free_output(self):
        for m in generic_models():
            lio = build_liouvillian(m)
            out = lio.apply(np.eye(m.dim, dtype=complex) / m.dim)
            assert abs(np.trace(out)) < 1e-14

    def test_spectrum_in_left_half_plane(self):
        for m in generic_models():
            ev = np.linalg.eigvals(build_liouvillian(m).matrix)
            assert np.max(ev.real) < 1e-10
            assert np.min(np.abs(ev)) < 1e-12  # at least one stationary direction


class TestSteadyState:
    def test_equilibrium_product_state(self):
        t = 1.0
        m = two_qubit_fridge(1.0, 3.0, t, t, 1e-3, 1e-3, 1e-3, 1e-3)
        res = steady_state(m)
        taus = [thermal_state(p, t) for p in m.particles]
        expected = np.kron(np.kron(taus[0], taus[1]), taus[2])
        np.testing.assert_allclose(res.rho, expected, atol=1e-11)
        assert res.residual < 1e-12

    def test_decoupled_particles_reset_to_their_baths(self):
        m = two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 1e-3, 1e-3, 1e-3, g=0.0, t_room=1.5)
        res = steady_state(m)
        taus = [thermal_state(p, p.bath[0].temperature) for p in m.particles]
        expected = np.kron(np.kron(taus[0], taus[1]), taus[2])
        np.testing.assert_allclose(res.rho, expected, atol=1e-12)

    def test_all_rates_zero_is_an_error(self):
        m = two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 0.0, 0.0, 0.0, 1e-3)
        with pytest.raises(NonUniqueStationaryStateError):
            steady_state(m)

    def test_perfect_insulation_limit_value(self):
        # weak coupling, cold reset rate far below the others
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateStationaryWarning)
            m = two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 1e-7, 1e-3, 1e-3, 1e-3)
            res = steady_state(m)
        from qfridge.observables import particle_temperatures

        t1 = particle_temperatures(m, res.rho)[0].value
        assert t1 == pytest.approx(0.400, rel=5e-3)

    def test_warns_on_degenerate_gap(self):
        # no coupling and no baths on particles 1 and 2: their marginals are
        # free, so the stationary manifold is genuinely degenerate
        m = two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 0.0, 0.0, 1e-3, g=0.0)
        with pytest.warns(DegenerateStationaryWarning):
            steady_state(m)

    def test_gap_stays_open_toward_perfect_insulation(self):
        # the stationary state stays unique as the cold reset rate vanishes
        # (the swap plus the other two baths still pin every mode)
        m = two_qubit_fridge(1.0, 3.0, 1.0, 4.0, 1e-9, 1e-3, 1e-3, 1e-3)
        res = steady_state(m)
        assert res.uniqueness_gap > 1e-5

    def test_residual_and_validity(self):
        rng = np.random.default_rng(22)
        for m in generic_models():
            res = steady_state(m)
            assert res.residual <= 1e-10
            assert abs(np.trace(res.rho) - 1.0) < 1e-12
            assert np.linalg.eigvalsh(res.rho)[0] > -1e-12
            assert res.uniqueness_gap > 1e-8


class TestEvolve:
    def test_frozen_generator_keeps_state_constant(self):
        particles = (ParticleSpec((0.0, 1.0)), ParticleSpec((0.0, 2.0)))
        m = custom_fridge(particles)
        rho0 = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
        traj = evolve(m, rho0, 5.0)
        for state in traj.states:
            np.testing.assert_allclose(state, rho0, atol=1e-14)

    def test_single_qubit_reset_closed_form(self):
        p_rate, t_bath = 0.3, 1.5
        qubit = ParticleSpec((0.0, 1.0), (BathChannel(FULL_RESET, t_bath, p_rate),))
        m = custom_fridge((qubit,))
        tau = thermal_state(qubit, t_bath)
        rho0 = np.diag([0.1, 0.9]).astype(complex)
        traj = evolve(m, rho0, 10.0, dt=0.01)
        for t, state in zip(traj.times, traj.states):
            decay = math.exp(-p_rate * t)
            expected = decay * rho0 + (1.0 - decay) * tau
            np.testing.assert_allclose(state, expected, atol=1e-9)

    def test_long_time_agrees_with_steady_state(self):
        m = two_qubit_fridge(1.0, 2.5, 1.0, 5.0, 0.3, 0.28, 0.26, 0.3)
        rho0 = np.eye(8, dtype=complex) / 8
        traj = evolve(m, rho0, 50.0 / 0.26)
        res = steady_state(m)
        assert trace_distance(traj.final_state, res.rho) < 1e-6

    def test_trace_and_positivity_along_trajectory(self):
        m = qubit_qutrit_fridge(1.0, 1.2, 1.0, 5.0, 0.2, 0.2, 0.2, 0.2, 0.2)
        taus = [thermal_state(p, p.bath[0].temperature) for p in m.particles]
        rho0 = np.kron(np.kron(taus[0], taus[1]), taus[2])
        traj = evolve(m, rho0, 40.0, n_samples=40)
        for state in traj.states:
            assert abs(np.trace(state).real - 1.0) < 1e-9
            assert np.linalg.eigvalsh((state + state.conj().T) / 2)[0] > -1e-9

    def test_coarse_step_is_halved_with_warning(self):
        m = generic_models()[0]
        rho0 = np.eye(8, dtype=complex) / 8
        with pytest.warns(UserWarning, match="halved"):
            traj = evolve(m, rho0, 1.0, dt=0.5)
        assert traj.final_defects.trace_defect < 1e-12

    def test_input_validation(self):
        m = generic_models()[0]
        with pytest.raises(ValueError):
            evolve(m, np.eye(4) / 4, 1.0)
        with pytest.raises(ValueError):
            evolve(m, np.eye(8) / 8, -1.0)
