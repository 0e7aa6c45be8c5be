"""Stepper, trajectory diagnostics, conservation and blow-up behavior."""

import numpy as np
import pytest

from voigtflow import (
    BlowUpError,
    CFLWarning,
    ModalPeriodicForcing,
    ModelParams,
    NoForcing,
    SimulationState,
    SpectralVectorField,
    StepperConfig,
    TorusGrid,
    blowup_monitor,
    divergence_max,
    integrate,
    manufactured_forcing,
    manufactured_shear,
    rk4_step,
    sobolev_norm,
    step,
    taylor_green,
    voigt_energy,
    zero_field,
)


def shear_wave(grid, mode, amplitude):
    coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
    n = grid.n_modes
    pos = tuple(m % n for m in mode)
    neg = tuple((-m) % n for m in mode)
    a = np.asarray(amplitude, dtype=complex)
    coeffs[(slice(None),) + pos] = a
    coeffs[(slice(None),) + neg] = np.conj(a)
    return SpectralVectorField(grid, coeffs)


@pytest.fixture(scope="module")
def grid():
    return TorusGrid(16)


class TestStepperConfig:
    @pytest.mark.parametrize("dt", [0.0, -1e-3, np.nan])
    def test_bad_dt(self, dt):
        with pytest.raises(ValueError):
            StepperConfig(dt)

    def test_bad_interval(self):
        with pytest.raises(ValueError):
            StepperConfig(1e-3, 0)


class TestStep:
    def test_zero_state_stays_zero(self, grid):
        out = step(SimulationState(0.0, zero_field(grid)), StepperConfig(1e-2),
                   ModelParams(0.1, 0.1))
        assert out.t == pytest.approx(1e-2)
        assert np.abs(out.u.coeffs).max() == 0.0

    def test_single_mode_local_error_order5(self, grid):
        """One RK4 step against the exact per-mode exponential decay."""
        alpha, nu = 0.5, 0.2
        ksq = 4.0
        lam = -nu * ksq / (1.0 + alpha**2 * ksq)
        u0 = shear_wave(grid, (2, 0, 0), (0.0, 1.0, 0.0))
        params = ModelParams(alpha, nu)

        def one_step_error(dt):
            out = rk4_step(u0, 0.0, dt, params)
            exact = u0 * float(np.exp(lam * dt))
            return sobolev_norm(out - exact, 0)

        e1, e2 = one_step_error(0.1), one_step_error(0.05)
        assert e1 / e2 == pytest.approx(32.0, rel=0.15)  # O(dt^5) local error

    def test_euler_voigt_reversible_to_local_order(self, grid):
        u0 = taylor_green(grid, 1.0)
        params = ModelParams(0.2, 0.0)

        def round_trip_error(dt):
            fwd = rk4_step(u0, 0.0, dt, params)
            back = rk4_step(fwd, dt, -dt, params)
            return sobolev_norm(back - u0, 0)

        e1, e2 = round_trip_error(2e-2), round_trip_error(1e-2)
        assert e1 / e2 > 16.0  # consistent with O(dt^5) local error
        assert e2 < 1e-9


class TestIntegrate:
    def test_manufactured_linear_solution(self, grid):
        """Decaying shear wave with its manufactured forcing, T=1, dt=1e-3."""
        params = ModelParams(0.3, 0.05)
        ms = manufactured_shear(
            grid, (1, 0, 0), (0.0, 0.8, 0.0),
            lambda t: np.exp(-t), lambda t: -np.exp(-t),
        )
        forcing = manufactured_forcing(ms, params)
        traj = integrate(
            SimulationState(0.0, ms.at(0.0)), 1.0, StepperConfig(1e-3, 1000),
            params, forcing, store_fields=False,
        )
        exact = ms.at(1.0)
        rel = sobolev_norm(traj.final_state.u - exact, 0) / sobolev_norm(exact, 0)
        assert rel <= 1e-8

    def test_euler_voigt_energy_conserved(self, grid):
        traj = integrate(
            SimulationState(0.0, taylor_green(grid, 1.0)), 0.2,
            StepperConfig(1e-3, 50), ModelParams(0.1, 0.0),
        )
        e = [d.e_alpha for d in traj.diagnostics]
        assert abs(e[-1] - e[0]) / e[0] <= 1e-9
        for d in traj.diagnostics:
            assert d.e_alpha == d.l2_sq + 0.1**2 * d.grad_sq

    @pytest.mark.parametrize("alpha", [0.0, 0.2])
    def test_viscous_energy_decay(self, grid, alpha):
        traj = integrate(
            SimulationState(0.0, taylor_green(grid, 1.0)), 0.3,
            StepperConfig(2e-3, 10), ModelParams(alpha, 0.05),
        )
        l2 = [d.l2_sq for d in traj.diagnostics]
        e = [d.e_alpha for d in traj.diagnostics]
        assert all(b <= a for a, b in zip(l2, l2[1:]))
        assert all(b <= a for a, b in zip(e, e[1:]))

    def test_energy_balance_with_forcing(self, grid):
        """E(T) - E(0) + 2 nu int ||grad u||^2 - 2 int (f,u) vanishes."""
        params = ModelParams(0.1, 0.02)
        forcing = ModalPeriodicForcing((1, 0, 0), (0.0, 0.1, 0.0), 2.0)
        traj = integrate(
            SimulationState(0.0, taylor_green(grid, 1.0)), 0.3,
            StepperConfig(1e-3, 100), params, forcing, store_fields=False,
        )
        d0, dT = traj.diagnostics[0], traj.diagnostics[-1]
        residual = (
            dT.e_alpha - d0.e_alpha
            + 2.0 * dT.visc_dissip_integral
            - 2.0 * dT.work_integral
        )
        emax = max(d.e_alpha for d in traj.diagnostics)
        assert abs(residual) <= 1e-5 * emax

    def test_sampling_includes_endpoints(self, grid):
        traj = integrate(
            SimulationState(0.0, taylor_green(grid)), 0.05,
            StepperConfig(1e-2, 3), ModelParams(0.0, 0.0),
        )
        times = traj.times
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(0.05)
        assert len(traj.samples) == len(traj.diagnostics)

    def test_deterministic(self, grid):
        def run():
            return integrate(
                SimulationState(0.0, taylor_green(grid, 1.0)), 0.05,
                StepperConfig(1e-3, 10), ModelParams(0.1, 0.01),
            )

        a, b = run(), run()
        assert np.array_equal(a.final_state.u.coeffs, b.final_state.u.coeffs)
        assert [d.row() for d in a.diagnostics] == [d.row() for d in b.diagnostics]

    def test_solenoidal_along_trajectory(self, grid):
        defects = []

        def on_step(i, t, u):
            defects.append(divergence_max(u) / max(sobolev_norm(u, 0), 1e-300))

        integrate(
            SimulationState(0.0, taylor_green(grid, 1.0)), 0.02,
            StepperConfig(1e-3, 20), ModelParams(0.1, 0.0), on_step=on_step,
        )
        assert len(defects) == 20
        assert max(defects) <= 1e-12

    def test_blow_up_detected(self, grid):
        from voigtflow import random_field

        # a dt far beyond the viscous stability limit amplifies high modes
        u0 = taylor_green(grid, 1.0) + 0.01 * random_field(grid, 5.0, seed=1)
        with pytest.warns(CFLWarning):
            with pytest.raises(BlowUpError) as info:
                integrate(
                    SimulationState(0.0, u0), 5.0,
                    StepperConfig(0.1, 1), ModelParams(0.0, 1.0),
                )
        err = info.value
        assert err.t > 0
        assert err.diagnostics is not None
        assert err.partial  # diagnostics up to the failure are preserved


class TestEnergyAndMonitor:
    def test_zero_field_energy(self, grid):
        assert voigt_energy(zero_field(grid), 0.5) == 0.0

    def test_unit_pair_energy(self, grid):
        u = shear_wave(grid, (1, 0, 0), (0.0, 1.0, 0.0))
        assert voigt_energy(u, 1.0) == pytest.approx(4.0, rel=1e-14)

    def test_energy_matches_summation_oracle(self, grid):
        from voigtflow import random_field

        u = random_field(grid, 4.0, seed=2, h3_norm=1.0)
        alpha = 0.3
        n = grid.n_modes
        freq = np.fft.fftfreq(n, 1.0 / n)
        total = 0.0
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    k2 = freq[i] ** 2 + freq[j] ** 2 + freq[l] ** 2
                    total += (1 + alpha**2 * k2) * float(
                        (np.abs(u.coeffs[:, i, j, l]) ** 2).sum()
                    )
        assert voigt_energy(u, alpha) == pytest.approx(total, rel=1e-12)

    def test_monitor_is_alpha_sq_times_grad(self, grid):
        traj = integrate(
            SimulationState(0.0, taylor_green(grid, 1.0)), 0.05,
            StepperConfig(5e-3, 2), ModelParams(0.1, 0.0), store_fields=False,
        )
        series, sup = blowup_monitor(traj.diagnostics, 0.1)
        for (t, v), d in zip(series, traj.diagnostics):
            assert v == 0.1**2 * d.grad_sq
        assert sup == max(v for _, v in series)

    def test_monitor_zero_for_alpha_zero(self, grid):
        traj = integrate(
            SimulationState(0.0, taylor_green(grid, 1.0)), 0.02,
            StepperConfig(5e-3, 4), ModelParams(0.0, 0.0), store_fields=False,
        )
        series, sup = blowup_monitor(traj.diagnostics, 0.0)
        assert sup == 0.0
        assert all(v == 0.0 for _, v in series)
