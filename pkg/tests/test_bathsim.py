import math

import numpy as np
import pytest
from scipy.linalg import expm

from entbath.bathsim import (
    FullModel,
    build_generator,
    entanglement_trajectory,
    equilibrium_variances_sim,
    evolve,
    full_initial_covariance,
    full_propagator,
    hamiltonian_matrix,
    initial_state,
    plus_variance_series,
)
from entbath.errors import HorizonError, ParameterRegimeError, ValidationError
from entbath.gaussian import (
    BEAM_SPLITTER,
    ModeSpec,
    log_negativity,
    squeezed_cov,
    state_from_virtual_blocks,
    symplectic_form,
)
from entbath.spectra import OhmicSpectralDensity

DENSITY = OhmicSpectralDensity(gamma0=0.1, cutoff=20.0, mass=1.0)


def small_model(coupling="position", n=24, temperature=1.5, c12=0.0, renorm=True):
    if renorm:
        return FullModel.renormalized(DENSITY, n, temperature, omega_r=1.0, c12=c12,
                                      coupling_type=coupling)
    return FullModel.bare(DENSITY, n, temperature, omega0=3.0, c12=c12,
                          coupling_type=coupling)


class TestGenerator:
    def test_free_limit_block_diagonal(self):
        free = OhmicSpectralDensity(gamma0=0.0, cutoff=20.0)
        model = FullModel.renormalized(free, 6, 0.0, omega_r=1.3)
        a = build_generator(model)
        sys_block = a[:4, :4]
        a_offdiag = a.copy()
        a_offdiag[:4, :4] = 0.0
        for k in range(6):
            a_offdiag[4 + 2 * k : 6 + 2 * k, 4 + 2 * k : 6 + 2 * k] = 0.0
        assert np.allclose(a_offdiag, 0.0)
        # virtual system block: two decoupled oscillators at omega_r
        j4 = symplectic_form(2)
        h4 = np.diag([1.3**2, 1.0, 1.3**2, 1.0])
        assert np.allclose(sys_block, j4 @ h4, atol=1e-14)

    def test_position_coupling_touches_only_x_plus(self):
        model = small_model("position", n=8)
        h = hamiltonian_matrix(model)
        bath = slice(4, None)
        assert np.any(h[0, bath] != 0.0)        # x+ row reaches the bath
        assert np.allclose(h[1, bath], 0.0)     # p+ does not (position coupling)
        assert np.allclose(h[2, bath], 0.0)     # x- fully decoupled
        assert np.allclose(h[3, bath], 0.0)

    def test_symmetric_coupling_touches_both_channels(self):
        model = small_model("symmetric", n=8)
        h = hamiltonian_matrix(model)
        q = 4 + 2 * np.arange(8)
        assert np.all(h[0, q] != 0.0)
        assert np.all(h[1, q + 1] != 0.0)
        assert np.allclose(h[2:4, 4:], 0.0)

    @pytest.mark.parametrize("coupling", ["position", "symmetric"])
    def test_hamiltonian_symmetric_and_flow_condition(self, coupling):
        model = small_model(coupling, n=10)
        h = hamiltonian_matrix(model)
        assert np.allclose(h, h.T, atol=0.0)
        a = build_generator(model)
        j = symplectic_form(12)
        assert np.abs(a @ j + j @ a.T).max() < 1e-12 * max(1.0, np.abs(a).max())

    def test_site_basis_conjugation(self):
        model = small_model("position", n=5)
        h_virt = hamiltonian_matrix(model, basis="virtual")
        h_site = hamiltonian_matrix(model, basis="site")
        t = np.eye(2 * 7)
        t[:4, :4] = BEAM_SPLITTER
        assert np.allclose(h_site, t.T @ h_virt @ t, atol=1e-14)


class TestEvolveAgainstMatrixExponential:
    @pytest.mark.parametrize("coupling", ["position", "symmetric"])
    def test_reduced_covariance_matches_expm_oracle(self, coupling):
        model = small_model(coupling, n=24, temperature=1.5, c12=-0.2)
        state = initial_state(model, "two-mode-squeezed", r=1.0)
        times = np.array([0.3, 1.7, 2.9])
        traj = evolve(model, state, times)

        a = build_generator(model)
        v0 = full_initial_covariance(model, state)
        sbs = BEAM_SPLITTER
        for i, t in enumerate(times):
            s = expm(a * t)
            v_virt = (s @ v0 @ s.T)[:4, :4]
            v_site = sbs @ v_virt @ sbs.T
            assert np.allclose(traj.states[i].cov, v_site, atol=1e-10)

    @pytest.mark.parametrize("coupling", ["position", "symmetric"])
    def test_full_propagator_matches_expm_and_is_symplectic(self, coupling):
        model = small_model(coupling, n=12)
        a = build_generator(model)
        for t in (0.4, 2.2):
            s = full_propagator(model, t)
            assert np.allclose(s, expm(a * t), atol=1e-9)
            j = symplectic_form(14)
            assert np.abs(s @ j @ s.T - j).max() < 1e-10

    def test_mean_evolution_matches_expm(self):
        model = small_model("position", n=16)
        state = initial_state(model, "coherent-product", mean=np.array([1.0, -0.3, 0.4, 0.2]))
        times = np.array([1.1])
        traj = evolve(model, state, times)
        a = build_generator(model)
        full_mean = np.zeros(2 * 18)
        full_mean[:4] = BEAM_SPLITTER @ state.mean
        want = BEAM_SPLITTER @ (expm(a * 1.1) @ full_mean)[:4]
        assert np.allclose(traj.states[0].mean, want, atol=1e-11)


class TestTrajectoryProperties:
    def test_decoupled_bath_keeps_entanglement_constant(self):
        free = OhmicSpectralDensity(gamma0=0.0, cutoff=20.0)
        model = FullModel.renormalized(free, 64, 3.0, omega_r=1.0)
        state = initial_state(model, "two-mode-squeezed", r=1.2)
        times = np.linspace(0.0, 5.0, 40)
        _, energies = entanglement_trajectory(model, state, times)
        assert np.abs(energies - 2.4).max() < 1e-9

    def test_minus_block_rotates_freely(self):
        model = small_model("position", n=40, c12=-0.3)
        state = initial_state(model, "two-mode-squeezed", r=0.8)
        times = np.linspace(0.0, 6.0, 25)
        traj = evolve(model, state, times)
        mode = model.minus_mode
        s = mode.xp_scale
        v0 = (BEAM_SPLITTER @ state.cov @ BEAM_SPLITTER.T)[2:, 2:]
        for state_t, t in zip(traj.states, times):
            c, sn = math.cos(mode.frequency * t), math.sin(mode.frequency * t)
            rot = np.array([[c, sn / s], [-s * sn, c]])
            want = rot @ v0 @ rot.T
            got = (BEAM_SPLITTER @ state_t.cov @ BEAM_SPLITTER.T)[2:, 2:]
            assert np.allclose(got, want, atol=1e-8)

    def test_purity_of_reduced_state_bounded(self):
        model = small_model("position", n=60, temperature=5.0)
        state = initial_state(model, "two-mode-squeezed", r=2.0)
        times = np.linspace(0.0, 8.0, 60)
        traj = evolve(model, state, times)
        dets = np.array([np.linalg.det(s.cov) for s in traj.states])
        assert np.all(dets >= (1.0 / 16.0) * (1 - 1e-9))

    def test_cross_correlation_dies_out(self):
        # late-time <{x+,p+}>/2 drops well below its initial magnitude
        model = FullModel.renormalized(DENSITY, 400, 2.0, omega_r=1.0)
        plus = single = squeezed_cov(0.8, ModeSpec(1.0, 1.0))
        theta = np.pi / 5
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, s], [-s, c]])
        plus = rot @ plus @ rot.T  # rotated squeezed (+): nonzero xp correlation
        state = state_from_virtual_blocks(plus, squeezed_cov(0.3, ModeSpec(1.0, 1.0)))
        times = np.linspace(0.5, 55.0, 160)
        traj = evolve(model, state, times)
        _, _, cross = plus_variance_series(traj)
        initial = abs((BEAM_SPLITTER @ state.cov @ BEAM_SPLITTER.T)[0, 1])
        late = np.abs(cross[times > 45.0]).mean()
        assert late < 1e-3 * initial + 5e-4

    def test_coherent_input_symmetric_coupling_never_entangles(self):
        # no squeezing resource anywhere: the trajectory stays separable
        model = FullModel.renormalized(DENSITY, 300, 3.0, omega_r=1.0,
                                       coupling_type="symmetric")
        state = initial_state(model, "coherent-product")
        times = np.linspace(0.0, 40.0, 160)
        _, energies = entanglement_trajectory(model, state, times)
        assert np.all(energies < 1e-10)

    def test_entanglement_converges_in_mode_count(self):
        # halving the frequency spacing changes E_N(t) by < 1% below the horizon
        coarse = FullModel.renormalized(DENSITY, 200, 5.0, omega_r=1.0)
        fine = FullModel.renormalized(DENSITY, 400, 5.0, omega_r=1.0)
        times = np.linspace(0.0, 0.95 * coarse.validity_horizon, 120)
        _, e_coarse = entanglement_trajectory(
            coarse, initial_state(coarse, "two-mode-squeezed", r=2.0), times
        )
        _, e_fine = entanglement_trajectory(
            fine, initial_state(fine, "two-mode-squeezed", r=2.0), times
        )
        assert np.abs(e_coarse - e_fine).max() < 0.01 * np.abs(e_fine).max()

    def test_horizon_guard(self):
        model = small_model("position", n=8)  # horizon = pi*8/20 = 1.26
        state = initial_state(model, "coherent-product")
        with pytest.raises(HorizonError):
            evolve(model, state, np.linspace(0.0, 5.0, 10))
        traj = evolve(model, state, np.linspace(0.0, 5.0, 10), override_horizon=True)
        assert len(traj.states) == 10

    def test_time_grid_validation(self):
        model = small_model("position", n=8)
        state = initial_state(model, "coherent-product")
        with pytest.raises(ValidationError):
            evolve(model, state, np.array([0.0, 0.5, 0.4]))
        with pytest.raises(ValidationError):
            evolve(model, state, np.array([-1.0, 0.5]))


class TestModelConstruction:
    def test_renormalized_position_targets(self):
        model = FullModel.renormalized(DENSITY, 50, 1.0, omega_r=1.0, c12=-0.5)
        dos = DENSITY.delta_omega_sq
        assert model.omega0**2 == pytest.approx(1.0 - dos / 2.0, rel=1e-12)
        assert model.c12 == pytest.approx(-0.5 - dos / 2.0, rel=1e-12)
        assert model.omega_minus == pytest.approx(math.sqrt(1.5), rel=1e-12)
        assert model.omega_plus_dressed == pytest.approx(math.sqrt(0.5), rel=1e-12)

    def test_bare_unstable_position_rejected(self):
        # at omega_r = 1 the bare shift overwhelms the stiffness
        model = FullModel.bare(DENSITY, 64, 1.0, omega0=1.0)
        state = initial_state(model, "coherent-product")
        with pytest.raises(ParameterRegimeError):
            evolve(model, state, np.linspace(0.0, 1.0, 5))

    def test_symmetric_minus_mode_invariant(self):
        model = FullModel.renormalized(DENSITY, 32, 0.0, omega_r=1.0, c12=0.3,
                                       coupling_type="symmetric")
        minus = model.minus_mode
        assert minus.xp_scale == pytest.approx(model.mass * model.omega0, rel=1e-12)

    def test_invalid_virtual_frequency_rejected(self):
        with pytest.raises(ParameterRegimeError):
            FullModel.renormalized(DENSITY, 16, 0.0, omega_r=1.0, c12=1.5)

    def test_initial_state_kinds(self):
        model = small_model("position", n=16)
        tms = initial_state(model, "two-mode-squeezed", r=1.0)
        assert log_negativity(tms) == pytest.approx(2.0, abs=1e-9)
        strong = initial_state(model, "two-mode-squeezed", r=3.0)
        assert log_negativity(strong) == pytest.approx(6.0, abs=1e-9)
        sep = initial_state(model, "squeezed-product", r=1.0)
        assert log_negativity(sep) < 1e-12  # separable up to roundoff in the basis change
        mixed = initial_state(model, "two-mode-squeezed", r=1.0, purity_product=1.0)
        virt = BEAM_SPLITTER @ mixed.cov @ BEAM_SPLITTER.T
        assert math.sqrt(virt[2, 2] * virt[3, 3]) == pytest.approx(1.0, rel=1e-12)
        explicit = initial_state(model, "explicit-covariance", cov=np.eye(4) * 0.5)
        assert np.allclose(explicit.cov, np.eye(4) * 0.5)
        with pytest.raises(ValidationError):
            initial_state(model, "explicit-covariance")
        with pytest.raises(ValidationError):
            initial_state(model, "bogus")


class TestEquilibrium:
    def test_symmetric_variances_balanced(self):
        model = FullModel.renormalized(DENSITY, 400, 10.0, omega_r=1.0,
                                       coupling_type="symmetric")
        dx, dp = equilibrium_variances_sim(model)
        mass_omega = model.mass * model.omega0
        assert dp / (mass_omega * dx) == pytest.approx(1.0, abs=1e-3)

    def test_equilibrium_is_initial_state_independent(self):
        model = FullModel.renormalized(DENSITY, 400, 3.0, omega_r=1.0)
        a = equilibrium_variances_sim(model, initial_state(model, "coherent-product"))
        b = equilibrium_variances_sim(
            model, initial_state(model, "two-mode-squeezed", r=1.0)
        )
        assert a[0] == pytest.approx(b[0], rel=1e-3)
        assert a[1] == pytest.approx(b[1], rel=1e-3)

    def test_high_temperature_equipartition(self):
        model = FullModel.renormalized(DENSITY, 600, 10.0, omega_r=1.0)
        _, dp = equilibrium_variances_sim(model)
        assert dp**2 == pytest.approx(model.mass * 10.0, rel=0.05)

    def test_horizon_error_when_too_short(self):
        model = small_model("position", n=30)  # horizon ~ 4.7
        with pytest.raises(HorizonError):
            equilibrium_variances_sim(model)
