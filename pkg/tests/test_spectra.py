import math

import numpy as np
import pytest
from scipy.integrate import quad

from entbath.errors import ValidationError
from entbath.spectra import (
    DiscretizedBath,
    OhmicSpectralDensity,
    discretize,
    eta_kernel,
    eta_kernel_discrete,
    thermal_occupation,
)

DENSITY = OhmicSpectralDensity(gamma0=0.1, cutoff=20.0, mass=1.0)


class TestOhmicDensity:
    def test_point_value(self):
        assert DENSITY.j(1.0) == pytest.approx(0.2 / math.pi, rel=1e-14)

    def test_hard_cutoff(self):
        assert DENSITY.j(25.0) == 0.0
        assert DENSITY.j(20.0) == 0.0  # boundary counts as above the cutoff

    def test_rejects_negative_frequency(self):
        with pytest.raises(ValidationError):
            DENSITY.j(-1.0)

    def test_static_self_energy_integral(self):
        # analytic value 2 m gamma0 cutoff / pi, cross-checked by quadrature
        want = 4.0 / math.pi
        assert DENSITY.static_self_energy == pytest.approx(want, rel=1e-14)
        numeric, _ = quad(lambda w: DENSITY.j(w) / w, 1e-12, DENSITY.cutoff)
        assert numeric == pytest.approx(want, rel=1e-8)

    def test_delta_omega_sq(self):
        assert DENSITY.delta_omega_sq == pytest.approx(-4 * 0.1 * 20.0 / math.pi, rel=1e-14)

    def test_nonnegative_everywhere(self):
        w = np.linspace(0.0, 30.0, 301)
        j = DENSITY.j(w)
        assert np.all(j >= 0.0)
        assert np.all(j[w >= 20.0] == 0.0)


class TestThermalOccupation:
    def test_zero_temperature(self):
        assert thermal_occupation(3.0, 0.0) == 0.0

    def test_high_temperature_asymptote(self):
        w, t = 1e-4, 1.0
        assert thermal_occupation(w, t) == pytest.approx(t / w, rel=1e-3)

    def test_unit_ratio(self):
        assert thermal_occupation(2.0, 2.0) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-12)

    def test_monotone_in_temperature_and_frequency(self):
        temps = np.linspace(0.1, 5.0, 9)
        values = [thermal_occupation(1.0, t) for t in temps]
        assert np.all(np.diff(values) > 0)
        freqs = np.linspace(0.2, 8.0, 9)
        values = [thermal_occupation(w, 1.0) for w in freqs]
        assert np.all(np.diff(values) < 0)

    def test_rejects_bad_input(self):
        with pytest.raises(ValidationError):
            thermal_occupation(0.0, 1.0)
        with pytest.raises(ValidationError):
            thermal_occupation(1.0, -1.0)


class TestDiscretize:
    def test_single_mode_carries_full_weight(self):
        bath = discretize(DENSITY, 1, 0.0)
        assert bath.frequencies[0] == pytest.approx(10.0)
        assert bath.weight_sum() == pytest.approx(DENSITY.total_weight, rel=1e-12)

    @pytest.mark.parametrize("n", [200, 500])
    def test_sum_rule(self, n):
        bath = discretize(DENSITY, n, 1.0)
        assert bath.weight_sum() == pytest.approx(DENSITY.total_weight, rel=1e-3)

    def test_recurrence_doubles_with_modes(self):
        t1 = discretize(DENSITY, 100, 0.0).recurrence_time
        t2 = discretize(DENSITY, 200, 0.0).recurrence_time
        assert t2 == pytest.approx(2.0 * t1, rel=1e-14)

    def test_ladder_couplings_need_scale(self):
        bath = discretize(DENSITY, 10, 0.0)
        with pytest.raises(ValidationError):
            _ = bath.ladder_couplings
        scaled = discretize(DENSITY, 10, 0.0, ladder_scale=1.0)
        g2_density = scaled.ladder_couplings**2 / scaled.spacing
        assert g2_density[3] == pytest.approx(2.0 * DENSITY.j(scaled.frequencies[3]), rel=1e-12)

    def test_occupations(self):
        bath = discretize(DENSITY, 50, 2.0)
        k = 10
        assert bath.occupations[k] == pytest.approx(
            1.0 / math.expm1(bath.frequencies[k] / 2.0), rel=1e-12
        )

    def test_validation(self):
        with pytest.raises(ValidationError):
            discretize(DENSITY, 0, 1.0)
        with pytest.raises(ValidationError):
            DiscretizedBath(
                frequencies=np.array([2.0, 1.0]),
                position_couplings=np.ones(2),
                masses=np.ones(2),
                temperature=0.0,
                spacing=1.0,
            )


class TestEtaKernel:
    def test_static_value(self):
        val = eta_kernel(DENSITY, 0.0)
        assert val.real == pytest.approx(40.0 / math.pi, rel=1e-10)
        assert val.imag == 0.0

    def test_against_closed_form(self):
        # int_0^L a w e^{-iws} dw = a [ iL e^{-iLs}/s + (e^{-iLs} - 1)/s^2 ]
        a = (2.0 / math.pi) * DENSITY.mass * DENSITY.gamma0
        for s in (0.3, 3.0, 11.0):
            lam = DENSITY.cutoff
            want = a * (
                1j * lam * np.exp(-1j * lam * s) / s + (np.exp(-1j * lam * s) - 1.0) / s**2
            )
            got = eta_kernel(DENSITY, s)
            assert got == pytest.approx(want, rel=1e-8)

    def test_matches_discrete_sum_at_short_times(self):
        # agreement within 1% of the kernel scale for s < T_rec/10; the
        # midpoint rule's pointwise error grows as (s dw)^2 while the kernel
        # itself decays, so the bound is on the common scale
        bath = discretize(DENSITY, 400, 0.0, ladder_scale=2.5)
        scale = 2.0 / 2.5  # ladder density is 2 J / ladder_scale
        samples = np.linspace(0.05, bath.recurrence_time / 10.0, 25)
        cont = np.array([scale * eta_kernel(DENSITY, s) for s in samples])
        disc = np.array([eta_kernel_discrete(bath, s) for s in samples])
        assert np.abs(disc - cont).max() <= 0.01 * np.abs(cont).max()
        # pointwise agreement holds while s*dw stays small
        early = samples <= bath.recurrence_time / 40.0
        assert np.all(
            np.abs(disc[early] - cont[early]) <= 0.01 * np.abs(cont[early])
        )

    def test_rejects_negative_time(self):
        with pytest.raises(ValidationError):
            eta_kernel(DENSITY, -0.1)
