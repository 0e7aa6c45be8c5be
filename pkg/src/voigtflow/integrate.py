"""Time integration (classical RK4), diagnostics, energy and blow-up monitor.

The loop evolves the rfft half spectrum (the full array is redundant for
real fields) and expands to the full Hermitian layout only at record times;
all public inputs and outputs are full-layout SpectralVectorField objects.
"""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .dynamics import NoForcing
from .field import SpectralVectorField, _clean, _full_from_half, sobolev_norm

__all__ = [
    "StepperConfig",
    "SimulationState",
    "DiagnosticsRecord",
    "Trajectory",
    "BlowUpError",
    "CFLWarning",
    "step",
    "rk4_step",
    "integrate",
    "voigt_energy",
    "blowup_monitor",
    "DIAGNOSTICS_COLUMNS",
]

# growth of E_alpha beyond this factor over the initial value aborts the run
BLOWUP_ENERGY_FACTOR = 1e12

DIAGNOSTICS_COLUMNS = (
    "t",
    "l2_sq",
    "grad_sq",
    "e_alpha",
    "h3",
    "bkm_voigt",
    "visc_dissip_integral",
    "work_integral",
)


class CFLWarning(UserWarning):
    pass


class BlowUpError(RuntimeError):
    """Raised when the solution leaves the finite/physical regime."""

    def __init__(self, t, diagnostics, partial=None):
        super().__init__(f"blow-up detected at t={t:.6g}")
        self.t = t
        self.diagnostics = diagnostics
        self.partial = partial if partial is not None else []


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    record_interval: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if self.record_interval < 1 or self.record_interval != int(self.record_interval):
            raise ValueError(
                f"record_interval must be an integer >= 1, got {self.record_interval}"
            )


@dataclass
class SimulationState:
    t: float
    u: SpectralVectorField


@dataclass
class DiagnosticsRecord:
    t: float
    l2_sq: float
    grad_sq: float
    e_alpha: float
    h3: float
    bkm_voigt: float
    visc_dissip_integral: float
    work_integral: float

    def row(self):
        return tuple(getattr(self, name) for name in DIAGNOSTICS_COLUMNS)


@dataclass
class Trajectory:
    samples: list  # SimulationState at record times (empty if not stored)
    diagnostics: list  # DiagnosticsRecord at record times
    final_state: SimulationState

    @property
    def times(self):
        return [d.t for d in self.diagnostics]


class _Model:
    """Per-run cache of multipliers and masks on the rfft half spectrum."""

    def __init__(self, grid, params, forcing):
        n = grid.n_modes
        nh = n // 2 + 1
        self.grid = grid
        self.params = params
        self.forcing = forcing
        self.n = n
        self.k_h = grid.k_half
        self.ik_h = 1j * grid.k_half
        self.ksq_h = grid.k_sq[..., :nh]
        self.inv_ksq_h = grid.inv_k_sq[..., :nh]
        self.mask_h = grid.dealias_mask_half
        self.scale = float(n) ** 3
        self.visc_h = params.nu * self.ksq_h if params.nu else None
        self.voigt_inv_h = (
            1.0 / (1.0 + params.alpha**2 * self.ksq_h) if params.alpha else None
        )
        # weighted reductions for per-step norms
        self.w0 = grid.half_weights
        self.w1 = grid.half_weights * self.ksq_h
        self.w3 = grid.half_weights * self.ksq_h**3

    def rhs_half(self, h, t):
        n = self.n
        hd = h * self.mask_h
        vel = sfft.irfftn(hd, s=(n, n, n), axes=(-3, -2, -1))
        adv = np.empty_like(vel)
        for i in range(3):
            grad = sfft.irfftn(self.ik_h * hd[i], s=(n, n, n), axes=(-3, -2, -1))
            adv[i] = (vel * grad).sum(axis=0)
        conv = sfft.rfftn(adv, axes=(-3, -2, -1))
        conv *= self.mask_h
        kdot = (self.k_h * conv).sum(axis=0) * self.inv_ksq_h
        out = self.k_h * kdot
        out -= conv
        out *= self.scale  # product transforms carry a 1/N^3 pair
        if self.visc_h is not None:
            out -= self.visc_h * h
        self.forcing.add_into_half(out, t, self.grid)
        if self.voigt_inv_h is not None:
            out *= self.voigt_inv_h
        return out

    def project_half(self, h):
        kdot = (self.k_h * h).sum(axis=0) * self.inv_ksq_h
        return h - self.k_h * kdot

    def rk4_half(self, h, t, dt):
        k1 = self.rhs_half(h, t)
        k2 = self.rhs_half(h + (0.5 * dt) * k1, t + 0.5 * dt)
        k3 = self.rhs_half(h + (0.5 * dt) * k2, t + 0.5 * dt)
        k4 = self.rhs_half(h + dt * k3, t + dt)
        return h + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)

    def norms(self, h, alpha_sq):
        mag = (h.real**2 + h.imag**2).sum(axis=0)
        l2_sq = float((self.w0 * mag).sum())
        grad_sq = float((self.w1 * mag).sum())
        h3 = float(np.sqrt((self.w3 * mag).sum()))
        return l2_sq, grad_sq, l2_sq + alpha_sq * grad_sq, h3

    def expand(self, h):
        return SpectralVectorField(self.grid, _clean(_full_from_half(h, self.n), self.grid))

    def physical_max(self, h):
        n = self.n
        return float(np.abs(sfft.irfftn(h, s=(n, n, n), axes=(-3, -2, -1))).max()) * self.scale


def _half_of(u):
    return u.coeffs[..., : u.grid.n_modes // 2 + 1].copy()


def rk4_step(u, t, dt, params, forcing=None):
    """One raw RK4 step of the model from (t, u); dt may be negative."""
    model = _Model(u.grid, params, forcing if forcing is not None else NoForcing())
    h = model.project_half(model.rk4_half(_half_of(u), t, dt))
    return model.expand(h)


def step(state, config, params, forcing=None):
    """Advance one step of config.dt; output re-projected and finite-checked."""
    u_new = rk4_step(state.u, state.t, config.dt, params, forcing)
    t_new = state.t + config.dt
    l2 = sobolev_norm(u_new, 0) ** 2
    gr = sobolev_norm(u_new, 1) ** 2
    e = l2 + params.alpha**2 * gr
    if not np.isfinite(e):
        rec = DiagnosticsRecord(
            t_new, l2, gr, e, float("nan"), params.alpha**2 * gr, 0.0, 0.0
        )
        raise BlowUpError(t_new, rec)
    return SimulationState(t_new, u_new)


def _check_cfl(model, h, dt):
    umax = model.physical_max(h)
    if umax > 0 and dt > 0.5 / (umax * model.grid.k_max):
        warnings.warn(
            f"dt={dt:.3g} exceeds the advective CFL bound "
            f"{0.5 / (umax * model.grid.k_max):.3g} (max|u|={umax:.3g})",
            CFLWarning,
            stacklevel=3,
        )


def integrate(
    state0,
    horizon,
    config,
    params,
    forcing=None,
    on_step=None,
    store_fields=True,
):
    """Advance over [t0, t0+horizon], recording diagnostics every
    config.record_interval steps (first and last step always included).

    The viscous-dissipation and work integrals are accumulated with the
    trapezoid rule at every step.  Raises BlowUpError when coefficients go
    non-finite or E_alpha grows beyond 1e12 times its initial value.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    forcing = forcing if forcing is not None else NoForcing()
    grid = state0.u.grid
    n_steps = max(1, round(horizon / config.dt))
    dt = horizon / n_steps
    model = _Model(grid, params, forcing)
    alpha_sq = params.alpha**2
    t0 = state0.t

    h = _half_of(state0.u)
    l2_sq, grad_sq, e_alpha, h3 = model.norms(h, alpha_sq)
    # floor keeps the growth cap meaningful for (near-)zero initial data
    e_cap = BLOWUP_ENERGY_FACTOR * max(e_alpha, 1.0)
    work_rate = forcing.inner_with_half(h, t0, grid)
    visc_int = 0.0
    work_int = 0.0

    _check_cfl(model, h, dt)

    samples = []
    diagnostics = []

    def record(t):
        rec = DiagnosticsRecord(
            t, l2_sq, grad_sq, e_alpha, h3, alpha_sq * grad_sq, visc_int, work_int
        )
        diagnostics.append(rec)
        if store_fields:
            samples.append(SimulationState(t, model.expand(h)))

    record(t0)

    for i in range(1, n_steps + 1):
        t_prev = t0 + (i - 1) * dt
        t = t0 + i * dt
        h = model.project_half(model.rk4_half(h, t_prev, dt))

        prev_grad, prev_work = grad_sq, work_rate
        l2_sq, grad_sq, e_alpha, h3 = model.norms(h, alpha_sq)
        work_rate = forcing.inner_with_half(h, t, grid)
        visc_int += 0.5 * dt * params.nu * (prev_grad + grad_sq)
        work_int += 0.5 * dt * (prev_work + work_rate)

        if not np.isfinite(e_alpha) or e_alpha > e_cap:
            rec = DiagnosticsRecord(
                t, l2_sq, grad_sq, e_alpha, h3, alpha_sq * grad_sq, visc_int, work_int
            )
            raise BlowUpError(t, rec, partial=diagnostics + [rec])

        if on_step is not None:
            on_step(i, t, model.expand(h))

        if i % config.record_interval == 0 or i == n_steps:
            _check_cfl(model, h, dt)
            record(t)

    final = SimulationState(t0 + horizon, model.expand(h))
    return Trajectory(samples, diagnostics, final)


def voigt_energy(u, alpha):
    """E_alpha = ||u||^2 + alpha^2 ||grad u||^2."""
    return sobolev_norm(u, 0) ** 2 + alpha**2 * sobolev_norm(u, 1) ** 2


def blowup_monitor(diagnostics, alpha):
    """Series (t, alpha^2 ||grad u||^2) and its sup over the run."""
    series = [(d.t, alpha**2 * d.grad_sq) for d in diagnostics]
    sup = max(v for _, v in series) if series else 0.0
    return series, sup
