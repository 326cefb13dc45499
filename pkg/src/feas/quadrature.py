"""Direct O(N^2) kernel quadratures, used as independent checks of the Fourier paths.

The integrands are periodic with a single algebraic singularity at z = 0, so the
punctured trapezoid sum over grid offsets has an error expansion in powers of
h driven by the local Taylor coefficients (Navot / Lyness). The leading terms
are removed using finite-difference derivatives and zeta constants, so
nothing here touches a Fourier multiplier.
"""
from __future__ import annotations

from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import zeta

from .spectral import TWO_PI, Field, Grid, kernel_normalization, periodized_kernel


@lru_cache(maxsize=32)
def offset_kernel(sizes: tuple[int, ...], alpha: float, images: int | None = None) -> np.ndarray:
    """phi_alpha at every grid offset z != 0 (entry at z = 0 set to 0)."""
    grid = Grid(sizes)
    if grid.ndims == 1:
        z = np.arange(1, sizes[0]) * grid.spacing[0]
        phi = np.zeros(sizes[0])
        phi[1:] = periodized_kernel(z, alpha, images=images or 64)
        return phi
    z1, z2 = grid.coords()
    pts = np.stack([z1, z2], axis=-1)
    pts[0, 0] = (np.pi, np.pi)  # placeholder, overwritten below
    phi = periodized_kernel(pts, alpha, ndims=2, images=images or 24)
    phi[0, 0] = 0.0
    return phi


@lru_cache(maxsize=32)
def _lattice_zeta_2d(alpha: float) -> float:
    """sum'_{j in Z^2} |j|^{-alpha}, analytically continued: 4 zeta(a/2) beta(a/2)."""
    s = mpmath.mpf(alpha) / 2
    beta = mpmath.mpf(4) ** (-s) * (mpmath.zeta(s, 0.25) - mpmath.zeta(s, 0.75))
    return float(4 * mpmath.zeta(s) * beta)


def _d2(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Fourth-order centred second derivative."""
    r = lambda k: np.roll(a, -k, axis=axis)  # noqa: E731
    return (-r(2) + 16 * r(1) - 30 * a + 16 * r(-1) - r(-2)) / (12 * h * h)


def _d4(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    r = lambda k: np.roll(a, -k, axis=axis)  # noqa: E731
    return (r(2) - 4 * r(1) + 6 * a - 4 * r(-1) + r(-2)) / h**4


def _shifted_sum(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """out[x] = sum_z weights[z] * values[x + z] over all grid offsets z."""
    out = np.zeros_like(values)
    it = np.nditer(weights, flags=["multi_index"])
    for w in it:
        if w == 0.0:
            continue
        shift = tuple(-i for i in it.multi_index)
        out += float(w) * np.roll(values, shift, axis=tuple(range(values.ndim)))
    return out


def _singular_correction(f: np.ndarray, grid: Grid, alpha: float) -> np.ndarray:
    """Punctured-sum minus integral for int (f(x)-f(x+z)) |z|^{-n-alpha} dz."""
    h = grid.spacing[0]
    if grid.ndims == 1:
        # even part of f(x)-f(x+z): -(f''/2) z^2 - (f''''/24) z^4
        a0 = -0.5 * _d2(f, 0, h)
        a1 = -_d4(f, 0, h) / 24.0
        return 2 * zeta(alpha - 1) * a0 * h ** (2 - alpha) + 2 * zeta(alpha - 3) * a1 * h ** (4 - alpha)
    if len(set(grid.sizes)) != 1:
        raise ValueError("2D kernel quadrature needs equal spacing on both axes")
    lap = _d2(f, 0, h) + _d2(f, 1, h)
    # -(1/2) z.Hz |z|^{-2-alpha}; lattice symmetry leaves -(lap/4)|z|^{-alpha}
    return -0.25 * lap * _lattice_zeta_2d(alpha) * h ** (2 - alpha)


def kernel_quadrature_oracle(f: Field, alpha: float, images: int | None = None) -> Field:
    """Lambda^alpha f by direct quadrature of c * p.v. int (f(x) - f(x+z)) phi_alpha(z) dz."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha in (0,2) required for the kernel form, got {alpha}")
    grid = f.grid
    vals = f.values
    phi = offset_kernel(grid.sizes, float(alpha), images)
    dv = grid.cell_volume
    punctured = (vals * phi.sum() - _shifted_sum(vals, phi)) * dv
    corrected = punctured - _singular_correction(vals, grid, alpha)
    return Field(grid, kernel_normalization(grid.ndims, alpha) * corrected)


def kernel_alignment(u: Field, rho: Field, alpha: float) -> Field:
    """C_alpha(u, rho) = c p.v. int (u(x+z) - u(x)) rho(x+z) phi(z) dz by quadrature.

    Splits as -K(rho u) + u K(rho) with K the quadrature above, which carries the
    singular-cell correction for the combined integrand.
    """
    return -kernel_quadrature_oracle(rho * u, alpha) + u * kernel_quadrature_oracle(rho, alpha)


def pair_double_sum(g: Field, weight: np.ndarray, weight_diag: np.ndarray, alpha: float) -> float:
    """c * int int W(x,y) (g(x)-g(y))^2 phi_alpha(x-y) dy dx for n = 1.

    ``weight[i, j]`` is W(x_i, x_j) (symmetric); ``weight_diag`` is W(x, x), used
    in the leading singular correction W(x,x) g'(x)^2 |z|^{1-alpha}.
    """
    grid = g.grid
    if grid.ndims != 1:
        raise ValueError("pair_double_sum is implemented for n = 1")
    n = grid.sizes[0]
    h = grid.spacing[0]
    vals = g.values
    phi = offset_kernel(grid.sizes, float(alpha))
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    diff2 = (vals[None, :] - vals[:, None]) ** 2
    inner = (weight * diff2 * phi[idx]).sum(axis=1) * h
    gp = (8 * (np.roll(vals, -1) - np.roll(vals, 1)) - (np.roll(vals, -2) - np.roll(vals, 2))) / (12 * h)
    inner -= 2 * zeta(alpha - 1) * weight_diag * gp**2 * h ** (2 - alpha)
    return kernel_normalization(1, alpha) * float(inner.sum()) * h


def dissipation_velocity_quadrature(rho: Field, u: Field, alpha: float) -> float:
    """c int int rho(x) rho(y) (u(x)-u(y))^2 phi_alpha(x-y): O(N^2) check."""
    r = rho.values
    return pair_double_sum(u, r[:, None] * r[None, :], r * r, alpha)


def dissipation_density_quadrature(rho: Field, alpha: float) -> float:
    """(c/2) int int (rho(x)+rho(y)) (rho(x)-rho(y))^2 phi_alpha(x-y): O(N^2) check."""
    r = rho.values
    return 0.5 * pair_double_sum(rho, r[:, None] + r[None, :], 2 * r, alpha)


def gradient_gap_quadrature(g: Field, alpha: float = 1.0) -> np.ndarray:
    """int (g(x+z)-g(x))^2 phi_alpha(z) dz at every grid point (n = 1)."""
    grid = g.grid
    if grid.ndims != 1:
        raise ValueError("gradient_gap_quadrature is implemented for n = 1")
    n = grid.sizes[0]
    h = grid.spacing[0]
    vals = g.values
    phi = offset_kernel(grid.sizes, float(alpha))
    idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
    out = ((vals[idx] - vals[:, None]) ** 2 * phi[None, :]).sum(axis=1) * h
    gp = (8 * (np.roll(vals, -1) - np.roll(vals, 1)) - (np.roll(vals, -2) - np.roll(vals, 2))) / (12 * h)
    return out - 2 * zeta(alpha - 1) * gp**2 * h ** (2 - alpha)


__all__ = [
    "TWO_PI",
    "kernel_quadrature_oracle",
    "kernel_alignment",
    "offset_kernel",
    "pair_double_sum",
    "dissipation_velocity_quadrature",
    "dissipation_density_quadrature",
    "gradient_gap_quadrature",
]
