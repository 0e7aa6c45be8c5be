"""Spectral grid for the 2*pi-periodic cube.

The box is [0, 2*pi)^3 so wavevectors are integer triples in fft layout.
Modes with any |k_i| = N/2 (the unmatched Nyquist planes) are kept at zero
by every constructor in this package; derivatives are unambiguous on the
remaining set.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PERIOD = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    """Cubic N^3 collocation grid, N even and >= 8."""

    n_modes: int
    _weight_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        n = self.n_modes
        if n != int(n) or int(n) < 8 or int(n) % 2 != 0:
            raise ValueError(f"n_modes must be an even integer >= 8, got {n!r}")
        object.__setattr__(self, "n_modes", int(n))

    @property
    def shape(self):
        return (self.n_modes, self.n_modes, self.n_modes)

    @property
    def dealias_cutoff(self):
        """Two-thirds-rule radius per axis for quadratic products."""
        return self.n_modes // 3

    @cached_property
    def freq(self):
        # integer wavenumbers 0, 1, ..., N/2-1, -N/2, ..., -1 as floats
        return np.fft.fftfreq(self.n_modes, 1.0 / self.n_modes)

    @cached_property
    def k(self):
        """Wavevector components, shape (3, N, N, N)."""
        kx, ky, kz = np.meshgrid(self.freq, self.freq, self.freq, indexing="ij")
        return np.stack([kx, ky, kz])

    @cached_property
    def k_sq(self):
        return (self.k**2).sum(axis=0)

    @cached_property
    def inv_k_sq(self):
        """1/|k|^2 with the zero mode mapped to 0."""
        ksq = self.k_sq.copy()
        ksq[0, 0, 0] = 1.0
        out = 1.0 / ksq
        out[0, 0, 0] = 0.0
        return out

    @cached_property
    def dealias_mask(self):
        c = self.dealias_cutoff
        ak = np.abs(self.k)
        return (ak[0] <= c) & (ak[1] <= c) & (ak[2] <= c)

    @cached_property
    def dealias_mask_half(self):
        return self.dealias_mask[..., : self.n_modes // 2 + 1]

    @cached_property
    def nyquist_mask(self):
        half = self.n_modes // 2
        ak = np.abs(self.k)
        return (ak[0] == half) | (ak[1] == half) | (ak[2] == half)

    @cached_property
    def k_half(self):
        """Wavevectors on the rfft half spectrum, shape (3, N, N, N//2+1)."""
        return self.k[..., : self.n_modes // 2 + 1]

    @cached_property
    def half_weights(self):
        """Pair multiplicity for sums over the rfft half spectrum: interior
        kz columns stand for a conjugate pair, the kz=0 and kz=N/2 planes
        contain both members themselves."""
        n = self.n_modes
        w = np.full((n, n, n // 2 + 1), 2.0)
        w[..., 0] = 1.0
        w[..., n // 2] = 1.0
        return w

    @property
    def k_max(self):
        """Largest resolved wavevector modulus (Nyquist planes excluded)."""
        return np.sqrt(3.0) * (self.n_modes // 2 - 1)

    def sobolev_weight(self, s):
        """|k|^(2s) with the zero mode weighted 0 (zero-mean fields)."""
        s = float(s)
        w = self._weight_cache.get(s)
        if w is None:
            w = np.zeros(self.shape)
            nz = self.k_sq > 0
            w[nz] = self.k_sq[nz] ** s
            self._weight_cache[s] = w
        return w

    def physical_points(self):
        """Collocation points, three arrays of shape (N, N, N)."""
        x = np.arange(self.n_modes) * (PERIOD / self.n_modes)
        return np.meshgrid(x, x, x, indexing="ij")
