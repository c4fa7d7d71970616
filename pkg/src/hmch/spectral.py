"""Fourier machinery on the unit circle S = R/Z.

Fields are sampled at x_i = i/N, i = 0..N-1, and expanded in the basis
exp(2*pi*i*k*x).  Coefficients are normalized so that the k = 0 entry is the
mean of the field:

    u(x_i) = sum_k  uhat(k) exp(2 pi i k x_i),   uhat(k) = (1/N) sum_i u(x_i) exp(-2 pi i k x_i)

Derivatives multiply by (2 pi i k)^j.  The Nyquist mode k = -N/2 is dropped for
odd j since it has no real-valued derivative on the grid.

The public API works on immutable ``PeriodicField`` / ``Spectrum`` values.
The time stepper uses the array-level helpers on ``Grid`` (rfft layout) for
speed.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

TWO_PI = 2.0 * np.pi
MAX_DERIVATIVE = 5
HERMITIAN_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def _check_grid_size(N: int) -> None:
    if N < 16 or N % 2:
        raise ValueError(f"grid size must be even and >= 16, got N={N}")


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """Real field sampled on the uniform grid x_i = i/N of the unit circle."""

    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples)
        if a.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if np.iscomplexobj(a):
            raise ValueError("samples must be real")
        a = a.astype(np.float64)
        _check_grid_size(a.size)
        if not np.all(np.isfinite(a)):
            raise ValueError("field contains non-finite samples")
        object.__setattr__(self, "samples", _frozen(a))

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.N)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], N: int) -> "PeriodicField":
        x = grid_points(N)
        return cls(np.broadcast_to(np.asarray(func(x), dtype=float), x.shape))

    @classmethod
    def constant(cls, c: float, N: int) -> "PeriodicField":
        return cls(np.full(N, float(c)))

    def _other(self, other):
        if isinstance(other, PeriodicField):
            if other.N != self.N:
                raise ValueError(f"grid mismatch: {self.N} vs {other.N}")
            return other.samples
        return other

    def __add__(self, other):
        return PeriodicField(self.samples + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return PeriodicField(self.samples - self._other(other))

    def __rsub__(self, other):
        return PeriodicField(self._other(other) - self.samples)

    def __mul__(self, other):
        return PeriodicField(self.samples * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return PeriodicField(-self.samples)

    def __len__(self):
        return self.N


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients ordered by wavenumber k = -N/2, ..., N/2 - 1."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1:
            raise ValueError("coeffs must be one-dimensional")
        _check_grid_size(c.size)
        if not np.all(np.isfinite(c)):
            raise ValueError("spectrum contains non-finite coefficients")
        object.__setattr__(self, "coeffs", _frozen(c))

    @property
    def N(self) -> int:
        return self.coeffs.size

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.N // 2, self.N // 2)

    def coeff(self, k: int) -> complex:
        if not -self.N // 2 <= k < self.N // 2:
            raise IndexError(f"wavenumber {k} outside [-{self.N // 2}, {self.N // 2})")
        return complex(self.coeffs[k + self.N // 2])

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        c = self.coeffs
        scale = max(np.max(np.abs(c)), np.finfo(float).tiny)
        h = self.N // 2
        # pairs (k, -k) for k = 1..h-1; k = 0 and k = -N/2 must be real
        pos = c[h + 1:]
        neg = c[h - 1:0:-1]
        err = max(
            np.max(np.abs(pos - np.conj(neg)), initial=0.0),
            abs(c[h].imag),
            abs(c[0].imag),
        )
        return err <= rtol * scale


def grid_points(N: int) -> np.ndarray:
    return np.arange(N) / N


def wavenumbers(N: int) -> np.ndarray:
    """Integer wavenumbers in numpy FFT order."""
    return np.fft.fftfreq(N, 1.0 / N)


def to_spectrum(f: PeriodicField) -> Spectrum:
    return Spectrum(np.fft.fftshift(np.fft.fft(f.samples)) / f.N)


def from_spectrum(v: Spectrum) -> PeriodicField:
    if not v.is_hermitian():
        raise ValueError("spectrum is not Hermitian-symmetric; inverse would be complex")
    u = np.fft.ifft(np.fft.ifftshift(v.coeffs) * v.N)
    return PeriodicField(u.real)


class Grid:
    """Precomputed wavenumber tables for one grid size, rfft layout.

    Array helpers take and return real sample arrays or rfft coefficient
    arrays (unnormalized, as numpy returns them).
    """

    def __init__(self, N: int):
        _check_grid_size(N)
        self.N = N
        self.k = np.arange(N // 2 + 1, dtype=float)
        self.kk = TWO_PI * self.k
        # strict: a kept mode at exactly N/3 would alias back into the band
        self.dealias_mask = 3 * self.k < N
        # Parseval weights for rfft storage: interior modes appear twice
        w = np.full(self.k.size, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        self.parseval_weights = w / N**2
        self._deriv = {}
        for j in range(MAX_DERIVATIVE + 1):
            m = (1j * self.kk) ** j
            if j % 2 == 1:
                m[-1] = 0.0
            m.setflags(write=False)
            self._deriv[j] = m

    def deriv_multiplier(self, j: int) -> np.ndarray:
        if not 0 <= j <= MAX_DERIVATIVE:
            raise ValueError(f"derivative order must be in 0..{MAX_DERIVATIVE}, got {j}")
        return self._deriv[j]

    def forward(self, u: np.ndarray) -> np.ndarray:
        return np.fft.rfft(u)

    def inverse(self, uh: np.ndarray) -> np.ndarray:
        return np.fft.irfft(uh, n=self.N)

    def diff(self, uh: np.ndarray, j: int) -> np.ndarray:
        return self.inverse(self.deriv_multiplier(j) * uh)

    def dealias(self, uh: np.ndarray) -> np.ndarray:
        return np.where(self.dealias_mask, uh, 0.0)

    def integral_sq(self, uh: np.ndarray, weight: np.ndarray | None = None) -> float:
        """Grid integral of the square of the field whose rfft is ``uh``."""
        p = np.abs(uh) ** 2 * self.parseval_weights
        if weight is not None:
            p = p * weight
        return float(np.sum(p))


@functools.lru_cache(maxsize=32)
def get_grid(N: int) -> Grid:
    return Grid(N)


def derivative(f: PeriodicField, j: int) -> PeriodicField:
    if not 0 <= j <= MAX_DERIVATIVE:
        raise ValueError(f"derivative order must be in 0..{MAX_DERIVATIVE}, got {j}")
    g = get_grid(f.N)
    return PeriodicField(g.diff(g.forward(f.samples), j))


def mean(f: PeriodicField) -> float:
    return float(np.mean(f.samples))


def sobolev_norm(f: PeriodicField, s: float) -> float:
    """H^s norm, sqrt(sum_k (1 + 4 pi^2 k^2)^s |fhat(k)|^2), over resolved modes."""
    if not np.isfinite(s):
        raise ValueError("Sobolev index must be finite")
    g = get_grid(f.N)
    return sobolev_norm_array(g, g.forward(f.samples), s)


def sobolev_norm_array(g: Grid, uh: np.ndarray, s: float) -> float:
    return float(np.sqrt(g.integral_sq(uh, (1.0 + g.kk**2) ** s)))


def lp_norm(f: PeriodicField, p: Union[float, str] = 2.0) -> float:
    """Uniform-grid L^p norm; ``p=inf`` gives the max of |samples|."""
    if isinstance(p, str):
        p = float(p)
    if np.isinf(p) and p > 0:
        return float(np.max(np.abs(f.samples)))
    if not p >= 1:
        raise ValueError(f"L^p norm requires p >= 1, got {p}")
    a = np.abs(f.samples)
    scale = a.max()
    if scale == 0.0:
        return 0.0
    return float(scale * np.mean((a / scale) ** p) ** (1.0 / p))


def dealias(v: Spectrum) -> Spectrum:
    """Two-thirds rule: keep only modes with 3|k| < N."""
    keep = 3 * np.abs(v.wavenumbers) < v.N
    return Spectrum(np.where(keep, v.coeffs, 0.0))


def product(f: PeriodicField, h: PeriodicField, dealiased: bool = True) -> PeriodicField:
    """Pointwise product, optionally filtered by the two-thirds rule."""
    g = get_grid(f.N)
    if f.N != h.N:
        raise ValueError("grid mismatch")
    if not dealiased:
        return f * h
    a = g.inverse(g.dealias(g.forward(f.samples)))
    b = g.inverse(g.dealias(g.forward(h.samples)))
    return PeriodicField(g.inverse(g.dealias(g.forward(a * b))))


def padded_product(f: PeriodicField, h: PeriodicField) -> PeriodicField:
    """Alias-free product: multiply on a doubled grid, truncate back to N modes."""
    N = f.N
    M = 2 * N
    fh = np.fft.rfft(f.samples)
    hh = np.fft.rfft(h.samples)
    fh[-1] = 0.0
    hh[-1] = 0.0
    up_f = np.fft.irfft(fh * (M / N), n=M)
    up_h = np.fft.irfft(hh * (M / N), n=M)
    ph = np.fft.rfft(up_f * up_h)[: N // 2 + 1] * (N / M)
    ph[-1] = 0.0
    return PeriodicField(np.fft.irfft(ph, n=N))
