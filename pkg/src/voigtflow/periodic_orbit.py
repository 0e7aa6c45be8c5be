"""Time-periodic Navier-Stokes-Voigt solutions via Picard iteration of the
period map u0 -> u(T_p).  Dissipation (nu > 0) contracts toward the orbit;
non-convergence within max_iters is reported, never raised.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import ModalPeriodicForcing, ModelParams
from .field import SpectralVectorField, sobolev_norm
from .integrate import SimulationState, StepperConfig, integrate, voigt_energy

__all__ = [
    "PoincareConfig",
    "OrbitResult",
    "poincare_map",
    "absorbing_radius",
    "find_periodic_solution",
    "linear_periodic_response",
]


@dataclass(frozen=True)
class PoincareConfig:
    period: float
    params: ModelParams
    forcing: ModalPeriodicForcing
    stepper: StepperConfig
    tol: float = 1e-9
    max_iters: int = 100

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError(f"period must be > 0, got {self.period}")
        if self.params.nu <= 0:
            raise ValueError("nu must be > 0 (dissipation drives the absorbing ball)")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not isinstance(self.forcing, ModalPeriodicForcing):
            raise ValueError("forcing must be modal periodic")
        if abs(self.forcing.omega * self.period - 2.0 * np.pi) > 1e-9 * 2.0 * np.pi:
            raise ValueError(
                f"forcing frequency {self.forcing.omega} does not match the "
                f"period {self.period} (need omega = 2*pi/period)"
            )


@dataclass
class OrbitResult:
    u_star: SpectralVectorField
    residual_history: list
    e_alpha_history: list
    radius: float
    converged: bool
    iterations: int

    def to_json_dict(self):
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.residual_history[-1] if self.residual_history else None,
            "R": self.radius,
            "e_alpha_history": self.e_alpha_history,
        }


def poincare_map(u0, config):
    """Solution one forcing period after the initial datum u0 (phase t=0)."""
    traj = integrate(
        SimulationState(0.0, u0),
        config.period,
        config.stepper,
        config.params,
        config.forcing,
        store_fields=False,
    )
    return traj.final_state.u


def absorbing_radius(config, grid=None):
    """Radius R with R^2 = c3/(1 - exp(-c1*T_p)) of the ball E_alpha <= R^2
    that the period map leaves invariant:

        c1 = 2*nu/(1 + alpha^2)   (spectral Poincare constant, min |k|^2 = 1,
                                   with the regularization weight)
        c3 = (1/nu) * integral over one period of ||f||_{H_{-1}}^2.
    """
    nu = config.params.nu
    if nu <= 0:
        raise ValueError("nu must be > 0")
    c1 = 2.0 * nu / (1.0 + config.params.alpha**2)
    c3 = config.forcing.integral_h_minus1_sq(0.0, config.period, grid) / nu
    return float(np.sqrt(c3 / (1.0 - np.exp(-c1 * config.period))))


def find_periodic_solution(guess, config):
    """Picard iteration of the period map from the given guess.

    Stops when the H_1 distance between successive iterates drops below
    config.tol or after max_iters maps; the energy of every iterate is
    recorded against the absorbing radius.
    """
    radius = absorbing_radius(config, guess.grid)
    alpha = config.params.alpha
    e0 = voigt_energy(guess, alpha)
    if radius > 0 and e0 > radius**2:
        warnings.warn(
            f"guess energy {e0:.3g} lies outside the absorbing ball R^2={radius**2:.3g}",
            stacklevel=2,
        )
    u = guess
    residuals = []
    energies = [e0]
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        u_next = poincare_map(u, config)
        res = sobolev_norm(u_next - u, 1)
        residuals.append(res)
        energies.append(voigt_energy(u_next, alpha))
        u = u_next
        if res <= config.tol:
            converged = True
            break
    return OrbitResult(u, residuals, energies, radius, converged, iterations)


def linear_periodic_response(grid, forcing, params):
    """Exact periodic orbit of the linearized model for modal forcing:
    u_hat(t) = f_hat(t) / (i*omega*(1+alpha^2|k|^2) + nu*|k|^2), here at t=0.

    The convective term of a single shear mode vanishes, so for modal
    forcing this is also the nonlinear periodic solution.
    """
    ksq = float(sum(m * m for m in forcing.mode))
    denom = 1j * forcing.omega * (1.0 + params.alpha**2 * ksq) + params.nu * ksq
    a = np.array(forcing.amplitude) / denom
    coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
    n = grid.n_modes
    pos = tuple(m % n for m in forcing.mode)
    neg = tuple((-m) % n for m in forcing.mode)
    coeffs[(slice(None),) + pos] = a
    coeffs[(slice(None),) + neg] = np.conj(a)
    return SpectralVectorField(grid, coeffs)
