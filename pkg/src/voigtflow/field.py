"""Zero-mean, divergence-free vector fields stored as Fourier coefficients.

Coefficients are the normalized Fourier series coefficients w_hat_k with
w(x) = sum_k w_hat_k exp(i k.x), stored as a full complex array in fft
layout with Hermitian symmetry enforced, so w is real.  Sobolev norms are
coefficient sums, ||w||_{H_s}^2 = sum_{k!=0} |k|^(2s) |w_hat_k|^2; this is
the L^2-type norm under the normalized measure on the box (the Lebesgue
L^2([0,2pi]^3) norm is (2pi)^{3/2} times larger).
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .grid import TorusGrid

__all__ = [
    "SpectralVectorField",
    "SpectralScalarField",
    "zero_field",
    "from_physical",
    "to_physical",
    "sobolev_norm",
    "sobolev_inner",
    "leray_project",
    "helmholtz_invert",
    "fractional_laplacian",
    "truncate_filter",
    "random_field",
    "taylor_green",
    "divergence_max",
]


def _reflect(c):
    """Index map k -> -k (mod N) on the last three axes."""
    return np.roll(np.flip(c, axis=(-3, -2, -1)), shift=(1, 1, 1), axis=(-3, -2, -1))


def _full_from_half(half, n):
    """Expand an rfft half spectrum to the full fft layout, exactly Hermitian."""
    lead = half.shape[:-3]
    full = np.empty(lead + (n, n, n), dtype=np.complex128)
    full[..., : n // 2 + 1] = half
    rev = (-np.arange(n)) % n
    cols = np.arange(n // 2 - 1, 0, -1)
    full[..., n // 2 + 1 :] = np.conj(half[..., rev, :, :][..., :, rev, :][..., :, :, cols])
    # interior conjugate pairs of the kz=0 and kz=N/2 planes are not paired by
    # the rfft layout; symmetrize them explicitly
    for plane in (0, n // 2):
        p = full[..., plane]
        pr = np.roll(np.flip(p, axis=(-2, -1)), shift=(1, 1), axis=(-2, -1))
        full[..., plane] = 0.5 * (p + np.conj(pr))
    return full


def _clean(coeffs, grid):
    """Zero the mean and the unmatched Nyquist planes in place."""
    coeffs[..., grid.nyquist_mask] = 0.0
    coeffs[..., 0, 0, 0] = 0.0
    return coeffs


@dataclass
class SpectralVectorField:
    """Velocity-like field; coeffs has shape (3, N, N, N), complex128."""

    grid: TorusGrid
    coeffs: np.ndarray

    def copy(self):
        return SpectralVectorField(self.grid, self.coeffs.copy())

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralVectorField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__


@dataclass
class SpectralScalarField:
    """Pressure-like field; coeffs has shape (N, N, N), complex128."""

    grid: TorusGrid
    coeffs: np.ndarray


def _check_same_grid(a, b):
    if a.grid.n_modes != b.grid.n_modes:
        raise ValueError(
            f"grid mismatch: {a.grid.n_modes}^3 vs {b.grid.n_modes}^3"
        )


def zero_field(grid):
    return SpectralVectorField(grid, np.zeros((3,) + grid.shape, dtype=np.complex128))


def to_physical(field):
    """Real collocation samples; shape (3, N, N, N) for vector fields."""
    n = field.grid.n_modes
    half = field.coeffs[..., : n // 2 + 1]
    return sfft.irfftn(half, s=(n, n, n), axes=(-3, -2, -1)) * float(n) ** 3


def from_physical(samples, grid):
    """Coefficients of real samples; removes the mean, enforces Hermitian
    symmetry exactly and zeroes the Nyquist planes."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[-3:] != grid.shape:
        raise ValueError(f"samples shape {samples.shape} does not match grid {grid.shape}")
    if not np.all(np.isfinite(samples)):
        raise ValueError("samples contain non-finite values")
    half = sfft.rfftn(samples, axes=(-3, -2, -1)) / float(grid.n_modes) ** 3
    coeffs = _clean(_full_from_half(half, grid.n_modes), grid)
    if samples.ndim == 3:
        return SpectralScalarField(grid, coeffs)
    return SpectralVectorField(grid, coeffs)


def sobolev_norm(field, s):
    """H_s norm, sqrt(sum_{k!=0} |k|^(2s) |w_hat_k|^2); s=0 is the L2 norm."""
    w = field.grid.sobolev_weight(s)
    c = field.coeffs
    mag = c.real**2 + c.imag**2
    if c.ndim == 4:
        mag = mag.sum(axis=0)
    return float(np.sqrt((w * mag).sum()))


def sobolev_inner(a, b, s):
    """H_s inner product Re sum |k|^(2s) a_hat . conj(b_hat)."""
    _check_same_grid(a, b)
    w = a.grid.sobolev_weight(s)
    dot = a.coeffs.real * b.coeffs.real + a.coeffs.imag * b.coeffs.imag
    if dot.ndim == 4:
        dot = dot.sum(axis=0)
    return float((w * dot).sum())


def leray_project(field):
    """Per-mode projection onto divergence-free fields, I - k k^T/|k|^2."""
    g = field.grid
    c = field.coeffs
    kdot = (g.k * c).sum(axis=0) * g.inv_k_sq
    return SpectralVectorField(g, c - g.k * kdot)


def helmholtz_invert(field, alpha):
    """Apply (I - alpha^2 Lap)^{-1}: multiply each mode by 1/(1+alpha^2|k|^2)."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    mult = 1.0 / (1.0 + alpha**2 * field.grid.k_sq)
    return SpectralVectorField(field.grid, field.coeffs * mult)


def fractional_laplacian(field, s):
    """Apply the |k|^s multiplier ((-Lap)^{s/2}); safe for negative s."""
    g = field.grid
    return SpectralVectorField(g, field.coeffs * g.sobolev_weight(s / 2.0))


def truncate_filter(field, delta):
    """Sharp low-pass keeping modes with |k| < 1/delta (boundary excluded)."""
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    g = field.grid
    keep = g.k_sq < (1.0 / delta) ** 2
    out = field.coeffs * keep
    cls = SpectralVectorField if field.coeffs.ndim == 4 else SpectralScalarField
    return cls(g, out)


def divergence_max(field):
    """max_k |k . u_hat_k|, the solenoidality defect."""
    g = field.grid
    kdot = (g.k * field.coeffs).sum(axis=0)
    return float(np.abs(kdot).max())


def random_field(grid, decay, seed, h3_norm=None):
    """Solenoidal random field with per-mode amplitude |k|^(-decay).

    Phases are drawn on the unit circle from a seeded generator (same seed,
    same field, bit for bit), conjugate-mirrored for Hermitian symmetry, then
    Leray-projected.  With h3_norm set, the result is rescaled to that H_3
    norm.  decay > 3/2 keeps the field in L^2 in 3d.
    """
    if decay <= 1.5:
        raise ValueError(f"decay must be > 3/2, got {decay}")
    rng = np.random.default_rng(seed)
    g = grid
    kx, ky, kz = g.k
    # lexicographically positive half space, Nyquist planes excluded
    pos = (kz > 0) | ((kz == 0) & (ky > 0)) | ((kz == 0) & (ky == 0) & (kx > 0))
    pos &= ~g.nyquist_mask
    amp = np.zeros(g.shape)
    nz = g.k_sq > 0
    amp[nz] = g.k_sq[nz] ** (-decay / 2.0)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(3,) + g.shape)
    half = np.where(pos, amp * np.exp(1j * phases), 0.0)
    coeffs = half + np.conj(_reflect(half))
    u = leray_project(SpectralVectorField(g, coeffs))
    if h3_norm is not None:
        current = sobolev_norm(u, 3)
        u = u * (h3_norm / current)
    return u


def taylor_green(grid, amplitude=1.0):
    """Taylor-Green vortex amplitude*(sin x cos y cos z, -cos x sin y cos z, 0)."""
    x, y, z = grid.physical_points()
    u = np.stack(
        [
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros_like(x),
        ]
    )
    # projection only touches round-off; makes the solenoidal invariant exact
    return leray_project(from_physical(amplitude * u, grid))
