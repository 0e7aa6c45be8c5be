"""Right-hand side of the unified model

    du/dt - alpha^2 d(Lap u)/dt + (u.grad)u - nu Lap u + grad p = f,
    div u = 0,

covering Euler (alpha=nu=0), Euler-Voigt (nu=0), Navier-Stokes (alpha=0)
and Navier-Stokes-Voigt.  Pressure is eliminated by Leray projection;
per mode the evolution reads

    du_hat/dt = (1 + alpha^2 |k|^2)^{-1} [ -nu |k|^2 u_hat - P_k N_hat + f_hat ].
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft as sfft

from .field import (
    SpectralScalarField,
    SpectralVectorField,
    _clean,
    _full_from_half,
    divergence_max,
    leray_project,
    sobolev_norm,
)

__all__ = [
    "ModelParams",
    "Forcing",
    "NoForcing",
    "SteadyForcing",
    "ModalPeriodicForcing",
    "SyntheticForcing",
    "convective_term",
    "pressure_from_velocity",
    "rhs",
    "ManufacturedSolution",
    "manufactured_shear",
    "manufactured_taylor_green",
    "manufactured_forcing",
    "taylor_green_convective",
]


@dataclass(frozen=True)
class ModelParams:
    """Regularization length alpha and viscosity nu, both >= 0."""

    alpha: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "nu"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


class Forcing:
    """External force; evaluated spectrally, always solenoidal and zero-mean."""

    def add_into(self, out, t, grid):
        raise NotImplementedError

    def coefficients(self, t, grid):
        out = np.zeros((3,) + grid.shape, dtype=np.complex128)
        self.add_into(out, t, grid)
        return out

    def inner_with(self, field, t):
        """L2 inner product (f(t), u)."""
        f = self.coefficients(t, field.grid)
        dot = f.real * field.coeffs.real + f.imag * field.coeffs.imag
        return float(dot.sum())

    def h_minus1_norm_sq(self, t, grid):
        """sum_k |f_hat_k|^2 / |k|^2 at time t."""
        f = self.coefficients(t, grid)
        mag = (f.real**2 + f.imag**2).sum(axis=0)
        return float((mag * grid.inv_k_sq).sum())

    def integral_h_minus1_sq(self, t0, t1, grid, npoints=257):
        """Trapezoid quadrature of the squared H_{-1} norm over [t0, t1]."""
        ts = np.linspace(t0, t1, npoints)
        vals = np.array([self.h_minus1_norm_sq(t, grid) for t in ts])
        return float(np.trapezoid(vals, ts))

    # rfft half-layout hooks used by the integrator hot loop
    def add_into_half(self, out, t, grid):
        out += self.coefficients(t, grid)[..., : grid.n_modes // 2 + 1]
        return out

    def inner_with_half(self, half, t, grid):
        f = self.coefficients(t, grid)[..., : grid.n_modes // 2 + 1]
        dot = (f.real * half.real + f.imag * half.imag).sum(axis=0)
        return float((grid.half_weights * dot).sum())


class NoForcing(Forcing):
    def add_into(self, out, t, grid):
        return out

    def inner_with(self, field, t):
        return 0.0

    def h_minus1_norm_sq(self, t, grid):
        return 0.0

    def integral_h_minus1_sq(self, t0, t1, grid, npoints=257):
        return 0.0

    def add_into_half(self, out, t, grid):
        return out

    def inner_with_half(self, half, t, grid):
        return 0.0


@dataclass
class SteadyForcing(Forcing):
    field: SpectralVectorField

    def __post_init__(self):
        defect = divergence_max(self.field)
        scale = sobolev_norm(self.field, 0)
        if defect > 1e-10 * max(scale, 1e-300):
            raise ValueError("steady forcing field must be solenoidal")

    def add_into(self, out, t, grid):
        out += self.field.coeffs
        return out


@dataclass
class ModalPeriodicForcing(Forcing):
    """f_hat at +k is amplitude * exp(i omega t); conjugate at -k."""

    mode: tuple
    amplitude: tuple
    omega: float

    def __post_init__(self):
        k = np.asarray(self.mode, dtype=float)
        a = np.asarray(self.amplitude, dtype=complex)
        if k.shape != (3,) or not np.any(k):
            raise ValueError(f"mode must be a nonzero integer triple, got {self.mode}")
        if np.any(k != np.round(k)):
            raise ValueError(f"mode must be integer, got {self.mode}")
        if abs(a @ k) > 1e-12 * max(np.linalg.norm(a), 1e-300):
            raise ValueError("amplitude must be orthogonal to the mode (solenoidal)")
        object.__setattr__(self, "mode", tuple(int(m) for m in self.mode))
        object.__setattr__(self, "amplitude", tuple(complex(c) for c in a))

    def _indices(self, n):
        pos = tuple(m % n for m in self.mode)
        neg = tuple((-m) % n for m in self.mode)
        return pos, neg

    def _half_entries(self, n):
        """(index, sign) of the pair members living in the rfft half layout."""
        entries = []
        for sign in (1, -1):
            m = tuple(sign * c for c in self.mode)
            iz = m[2] % n
            if iz <= n // 2:
                entries.append(((m[0] % n, m[1] % n, iz), sign))
        return entries

    def add_into(self, out, t, grid):
        pos, neg = self._indices(grid.n_modes)
        a = np.array(self.amplitude) * np.exp(1j * self.omega * t)
        out[(slice(None),) + pos] += a
        out[(slice(None),) + neg] += np.conj(a)
        return out

    def inner_with(self, field, t):
        pos, _ = self._indices(field.grid.n_modes)
        a = np.array(self.amplitude) * np.exp(1j * self.omega * t)
        u = field.coeffs[(slice(None),) + pos]
        return float(2.0 * (a.real @ u.real + a.imag @ u.imag))

    def add_into_half(self, out, t, grid):
        a = np.array(self.amplitude) * np.exp(1j * self.omega * t)
        for idx, sign in self._half_entries(grid.n_modes):
            out[(slice(None),) + idx] += a if sign > 0 else np.conj(a)
        return out

    def inner_with_half(self, half, t, grid):
        a = np.array(self.amplitude) * np.exp(1j * self.omega * t)
        idx, sign = self._half_entries(grid.n_modes)[0]
        f = a if sign > 0 else np.conj(a)
        u = half[(slice(None),) + idx]
        return float(2.0 * (f.real @ u.real + f.imag @ u.imag))

    def h_minus1_norm_sq(self, t, grid):
        ksq = float(sum(m * m for m in self.mode))
        a = np.array(self.amplitude)
        return 2.0 * float((a.real**2 + a.imag**2).sum()) / ksq

    def integral_h_minus1_sq(self, t0, t1, grid, npoints=None):
        return (t1 - t0) * self.h_minus1_norm_sq(t0, grid)


@dataclass
class SyntheticForcing(Forcing):
    """Forcing given by a callable t -> coefficient array (manufactured runs)."""

    fn: Callable[[float], np.ndarray]

    def add_into(self, out, t, grid):
        out += self.fn(t)
        return out


def _convective_coeffs(coeffs, grid):
    """Coefficients of (u.grad)u by dealiased pseudo-spectral products."""
    n = grid.n_modes
    nh = n // 2 + 1
    mask = grid.dealias_mask_half
    half = coeffs[..., :nh] * mask
    ik = 1j * grid.k_half
    vel = sfft.irfftn(half, s=(n, n, n), axes=(-3, -2, -1))
    adv = np.empty_like(vel)
    for i in range(3):
        grad_i = sfft.irfftn(ik * half[i], s=(n, n, n), axes=(-3, -2, -1))
        adv[i] = (vel * grad_i).sum(axis=0)
    out_half = sfft.rfftn(adv, axes=(-3, -2, -1)) * (float(n) ** 3)
    out_half *= mask
    return _clean(_full_from_half(out_half, n), grid)


def convective_term(u):
    """(u.grad)u, not yet projected; 2/3-rule dealiased before and after."""
    return SpectralVectorField(u.grid, _convective_coeffs(u.coeffs, u.grid))


def pressure_from_velocity(u):
    """Pressure from the Poisson equation -Lap p = div[(u.grad)u].

    Per mode p_hat = i k . N_hat / |k|^2, so that N + grad p is the Leray
    projection of N = (u.grad)u.
    """
    g = u.grid
    nc = _convective_coeffs(u.coeffs, g)
    p = 1j * (g.k * nc).sum(axis=0) * g.inv_k_sq
    return SpectralScalarField(g, p)


def rhs(u, t, params, forcing):
    """Model right-hand side du_hat/dt; output is solenoidal."""
    g = u.grid
    nc = _convective_coeffs(u.coeffs, g)
    kdot = (g.k * nc).sum(axis=0) * g.inv_k_sq
    out = -(nc - g.k * kdot)
    if params.nu:
        out -= params.nu * g.k_sq * u.coeffs
    forcing.add_into(out, t, g)
    if params.alpha:
        out /= 1.0 + params.alpha**2 * g.k_sq
    return SpectralVectorField(g, out)


@dataclass
class ManufacturedSolution:
    """Exact solution u(t, x) = g(t) * U(x) with U a solenoidal trig polynomial.

    convective holds the coefficients of the closed-form (U.grad)U, so the
    forcing below is assembled from analytic data, independent of the
    pseudo-spectral product path.
    """

    profile: SpectralVectorField
    convective: np.ndarray
    g: Callable[[float], float]
    gprime: Callable[[float], float]

    def __post_init__(self):
        defect = divergence_max(self.profile)
        scale = sobolev_norm(self.profile, 0)
        if defect > 1e-10 * max(scale, 1e-300):
            raise ValueError("manufactured profile must be solenoidal")

    def at(self, t):
        return self.profile * self.g(t)


def manufactured_shear(grid, mode, amplitude, g, gprime):
    """u = g(t) * 2 Re[a exp(i k.x)] with a . k = 0; (u.grad)u vanishes."""
    k = np.asarray(mode, dtype=float)
    a = np.asarray(amplitude, dtype=complex)
    if abs(a @ k) > 1e-12 * max(np.linalg.norm(a), 1e-300):
        raise ValueError("amplitude must be orthogonal to the mode")
    coeffs = np.zeros((3,) + grid.shape, dtype=np.complex128)
    n = grid.n_modes
    pos = tuple(int(m) % n for m in mode)
    neg = tuple(int(-m) % n for m in mode)
    coeffs[(slice(None),) + pos] = a
    coeffs[(slice(None),) + neg] = np.conj(a)
    profile = SpectralVectorField(grid, coeffs)
    zero = np.zeros_like(coeffs)
    return ManufacturedSolution(profile, zero, g, gprime)


def taylor_green_convective(grid, amplitude=1.0):
    """Closed-form (u.grad)u for the Taylor-Green profile:
    (A^2/4) * (sin 2x (1+cos 2z), sin 2y (1+cos 2z), 0)."""
    from .field import from_physical

    x, y, z = grid.physical_points()
    a2 = amplitude**2 / 4.0
    nvec = np.stack(
        [
            a2 * np.sin(2 * x) * (1.0 + np.cos(2 * z)),
            a2 * np.sin(2 * y) * (1.0 + np.cos(2 * z)),
            np.zeros_like(x),
        ]
    )
    return from_physical(nvec, grid).coeffs


def manufactured_taylor_green(grid, amplitude, g, gprime):
    from .field import taylor_green

    profile = taylor_green(grid, amplitude)
    return ManufacturedSolution(profile, taylor_green_convective(grid, amplitude), g, gprime)


def manufactured_forcing(exact, params):
    """Forcing that makes the manufactured solution exact:

        f = d(u)/dt - alpha^2 d(Lap u)/dt + (u.grad)u - nu Lap u + grad p,

    assembled spectrally from the analytic profile and convective term
    (grad p cancels the non-solenoidal part of the convective term)."""
    g = exact.profile.grid
    u_hat = exact.profile.coeffs
    n_proj = leray_project(SpectralVectorField(g, exact.convective)).coeffs
    voigt = 1.0 + params.alpha**2 * g.k_sq
    visc = params.nu * g.k_sq

    def fn(t):
        return (
            exact.gprime(t) * voigt * u_hat
            + exact.g(t) * visc * u_hat
            + exact.g(t) ** 2 * n_proj
        )

    return SyntheticForcing(fn)
