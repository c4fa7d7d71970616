"""The momentum operator A = mu - d_x^2 + d_x^4 and its Green's function.

On the unit circle A acts diagonally with multiplier

    lambda(k) = delta_0(k) + (2 pi k)^2 + (2 pi k)^4,

so lambda(0) = 1 and A is invertible.  The inverse is applied as the exact
spectral multiplier; ``green_convolve`` is an independent quadrature route
through the closed-form kernel and exists for cross-checking.
"""

from __future__ import annotations

import numpy as np

from .spectral import TWO_PI, Grid, PeriodicField, get_grid, grid_points

SINH_HALF = np.sinh(0.5)
COSH_HALF = np.cosh(0.5)


def mu_multiplier(N: int) -> np.ndarray:
    """lambda(k) in rfft layout (k = 0..N/2)."""
    return multiplier_array(get_grid(N))


def multiplier_array(g: Grid) -> np.ndarray:
    lam = g.kk**2 + g.kk**4
    lam[0] = 1.0
    return lam


def mu_symbol(k):
    """lambda(k) for integer wavenumbers k (scalar or array)."""
    kk = TWO_PI * np.asarray(k, dtype=float)
    lam = np.where(kk == 0, 1.0, kk**2 + kk**4)
    return lam if lam.ndim else float(lam)


def a_mu_apply(u: PeriodicField) -> PeriodicField:
    g = get_grid(u.N)
    return PeriodicField(g.inverse(multiplier_array(g) * g.forward(u.samples)))


def a_mu_inverse_apply(w: PeriodicField, j: int = 0) -> PeriodicField:
    """A^{-1} d_x^j w for j in 0..3, via the multiplier (2 pi i k)^j / lambda(k)."""
    if j not in (0, 1, 2, 3):
        raise ValueError(f"j must be in 0..3, got {j}")
    g = get_grid(w.N)
    return PeriodicField(g.inverse(inverse_multiplier(g, j) * g.forward(w.samples)))


def inverse_multiplier(g: Grid, j: int = 0) -> np.ndarray:
    return g.deriv_multiplier(j) / multiplier_array(g)


def _reduce(x):
    x = np.asarray(x, dtype=float)
    return x - np.floor(x)


def green_mu(x):
    """Kernel of (mu - d_x^2)^{-1}: (y - 1/2)^2 / 2 + 23/24, y = x - floor(x)."""
    y = _reduce(x)
    return 0.5 * (y - 0.5) ** 2 + 23.0 / 24.0


def green_helmholtz(x):
    """Kernel of (1 - d_x^2)^{-1} on the unit circle."""
    y = _reduce(x)
    return np.cosh(y - 0.5) / (2.0 * SINH_HALF)


def green_closed(x):
    """Closed-form Green's function of A, extended 1-periodically.

    g(x) = (y - 1/2)^2 / 2 - cosh(y - 1/2) / (2 sinh(1/2)) + 47/24,  y = x - floor(x).
    Accepts scalars or arrays.
    """
    y = _reduce(x)
    out = 0.5 * (y - 0.5) ** 2 - np.cosh(y - 0.5) / (2.0 * SINH_HALF) + 47.0 / 24.0
    return out if out.ndim else float(out)


def green_series(x, K: int, chunk: int = 4096):
    """Partial sum 1 + 2 sum_{k=1}^K cos(2 pi k x) / ((2 pi k)^2 + (2 pi k)^4).

    Truncation error is at most 2 sum_{k>K} (2 pi k)^-2 <= 1 / (pi^2 K).
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    x = np.asarray(x, dtype=float)
    flat = _reduce(x).ravel()
    total = np.zeros_like(flat)
    # sum smallest terms first to limit round-off
    for start in range(K, 0, -chunk):
        k = np.arange(max(1, start - chunk + 1), start + 1, dtype=float)[::-1]
        kk = TWO_PI * k
        coef = 2.0 / (kk**2 + kk**4)
        total += np.cos(TWO_PI * np.outer(flat, k)) @ coef
    out = (1.0 + total).reshape(x.shape)
    return out if out.ndim else float(out)


def green_series_on_grid(M: int, K: int) -> np.ndarray:
    """``green_series`` at x_j = j/M, evaluated by folding k mod M and one FFT.

    cos(2 pi k j / M) depends only on k mod M, so the K-term sum collapses to
    an M-point cosine transform of the folded coefficients.
    """
    if K < 1:
        raise ValueError("K must be a positive integer")
    if M < 1:
        raise ValueError("M must be positive")
    k = np.arange(1, K + 1, dtype=float)
    kk = TWO_PI * k
    coef = 2.0 / (kk**2 + kk**4)
    folded = np.zeros(M)
    # reversed accumulation: small terms first
    np.add.at(folded, (np.arange(1, K + 1) % M)[::-1], coef[::-1])
    return 1.0 + np.fft.fft(folded).real


def tail_bound(K: int) -> float:
    return 1.0 / (np.pi**2 * K)


def green_convolve(w: PeriodicField) -> PeriodicField:
    """Circular trapezoid quadrature of (g * w)(x_i) = (1/N) sum_m g(x_i - x_m) w(x_m)."""
    N = w.N
    gs = green_closed(grid_points(N))
    conv = np.fft.irfft(np.fft.rfft(gs) * np.fft.rfft(w.samples), n=N) / N
    return PeriodicField(conv)
