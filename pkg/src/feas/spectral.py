"""Periodic grids, fields and Fourier-side operators on the torus T^n = [0, 2pi)^n.

Conventions
-----------
Arrays are indexed ``[i1]`` (n=1) or ``[i1, i2]`` (n=2) with axis 0 the flow
direction x1. Spectral coefficients are normalised so that
``f(x) = sum_k fhat_k exp(i k.x)``, i.e. ``fhat = fftn(f) / N``.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft
from scipy import integrate
from scipy.special import gamma

TWO_PI = 2.0 * np.pi

ISOTROPIC = "isotropic"
ANISOTROPIC = "anisotropic_x1"
_MODES = (ISOTROPIC, ANISOTROPIC)


def fft_workers() -> int | None:
    """Thread cap for FFTs taken from ``FEAS_THREADS`` (None = library default)."""
    raw = os.environ.get("FEAS_THREADS")
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"FEAS_THREADS must be an integer >= 1, got {raw!r}")
    return n


def rfft(a: np.ndarray) -> np.ndarray:
    return sfft.rfftn(a, workers=fft_workers())


def irfft(ah: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    return sfft.irfftn(ah, s=shape, workers=fft_workers())


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha in (0,2] required, got {alpha}")
    return alpha


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on T^n with period 2pi on every axis."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) not in (1, 2):
            raise ValueError(f"only n=1 or n=2 supported, got ndims={len(sizes)}")
        for s in sizes:
            if s < 8 or s & (s - 1):
                raise ValueError(f"grid sizes must be powers of two >= 8, got {s}")

    @classmethod
    def of(cls, *sizes: int) -> "Grid":
        return cls(tuple(sizes))

    @property
    def ndims(self) -> int:
        return len(self.sizes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.sizes

    @property
    def lengths(self) -> tuple[float, ...]:
        return (TWO_PI,) * self.ndims

    @property
    def npoints(self) -> int:
        return math.prod(self.sizes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(TWO_PI / n for n in self.sizes)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def volume(self) -> float:
        return TWO_PI**self.ndims

    @property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer frequencies per axis in FFT order, {-N/2, ..., N/2-1}."""
        return tuple(np.fft.fftfreq(n, 1.0 / n).astype(int) for n in self.sizes)

    def coords(self) -> tuple[np.ndarray, ...]:
        axes = [np.arange(n) * (TWO_PI / n) for n in self.sizes]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def kvectors(self) -> tuple[np.ndarray, ...]:
        """Full-layout wavenumber arrays broadcast to the grid shape."""
        return tuple(np.meshgrid(*self.wavenumbers, indexing="ij"))

    def rkvectors(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers on the rfftn layout (last axis halved), broadcastable."""
        return _rkvectors(self.sizes)

    def rkmag(self) -> np.ndarray:
        return _rkmag(self.sizes)


@lru_cache(maxsize=64)
def _rkvectors(sizes: tuple[int, ...]) -> tuple[np.ndarray, ...]:
    n = len(sizes)
    out = []
    for ax, s in enumerate(sizes):
        k = np.fft.rfftfreq(s, 1.0 / s) if ax == n - 1 else np.fft.fftfreq(s, 1.0 / s)
        shape = [1] * n
        shape[ax] = k.size
        out.append(k.reshape(shape))
    return tuple(out)


@lru_cache(maxsize=64)
def _rkmag(sizes: tuple[int, ...]) -> np.ndarray:
    ks = _rkvectors(sizes)
    return np.sqrt(sum(k**2 for k in ks))


class Field:
    """Real periodic samples on a Grid; immutable, with a lazily built spectrum."""

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float, copy=True)
        if arr.shape != grid.shape:
            arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        vals = np.broadcast_to(np.asarray(fn(*grid.coords()), dtype=float), grid.shape)
        return cls(grid, vals)

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_spectral(cls, grid: Grid, coeffs: np.ndarray) -> "Field":
        vals = sfft.ifftn(np.asarray(coeffs) * grid.npoints, workers=fft_workers())
        return cls(grid, vals.real)

    @cached_property
    def spectral(self) -> np.ndarray:
        return sfft.fftn(self.values, workers=fft_workers()) / self.grid.npoints

    # arithmetic -------------------------------------------------------------
    def _other(self, other):
        if isinstance(other, Field):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return Field(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Field(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return Field(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return Field(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Field(self.grid, self.values / self._other(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __repr__(self):
        return f"Field(grid={self.grid.sizes}, min={self.min():.6g}, max={self.max():.6g})"

    # reductions -------------------------------------------------------------
    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())

    def integral(self) -> float:
        return float(self.values.sum()) * self.grid.cell_volume

    def mean(self) -> float:
        return float(self.values.mean())

    def norm(self, p: float = 2.0) -> float:
        return lp_norm(self.values, self.grid, p)


def lp_norm(values: np.ndarray, grid: Grid, p: float) -> float:
    """L^p(T^n) norm of grid samples (trapezoid rule, exact for resolved data)."""
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max())
    return float((a**p).sum() * grid.cell_volume) ** (1.0 / p)


def upsample(values: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited interpolation onto a grid ``factor`` times finer per axis."""
    if factor == 1:
        return np.asarray(values, dtype=float)
    shape = values.shape
    fine = tuple(s * factor for s in shape)
    ah = sfft.fftn(values, workers=fft_workers())
    big = np.zeros(fine, dtype=complex)
    slices_src, slices_dst = _spectral_embedding(shape, fine)
    for src, dst in zip(slices_src, slices_dst):
        big[dst] = ah[src]
    # split Nyquist coefficients so the interpolant stays real
    for ax, s in enumerate(shape):
        idx_src = [slice(None)] * len(shape)
        idx_src[ax] = s // 2
        idx_lo = [slice(None)] * len(shape)
        idx_hi = [slice(None)] * len(shape)
        idx_lo[ax] = s // 2
        idx_hi[ax] = fine[ax] - s // 2
        half = big[tuple(idx_hi)] * 0.5
        big[tuple(idx_hi)] = half
        big[tuple(idx_lo)] = half
    out = sfft.ifftn(big, workers=fft_workers()).real * (math.prod(fine) / math.prod(shape))
    return out


def _spectral_embedding(shape, fine):
    """Index pairs placing an FFT-ordered block of ``shape`` inside ``fine``."""
    per_axis = []
    for s, f in zip(shape, fine):
        lo = slice(0, s // 2)
        hi_src = slice(s // 2, s)
        hi_dst = slice(f - s // 2, f)
        per_axis.append(((lo, lo), (hi_src, hi_dst)))
    src, dst = [], []
    for combo in itertools.product(*per_axis):
        src.append(tuple(c[0] for c in combo))
        dst.append(tuple(c[1] for c in combo))
    return src, dst


def refined_sup(values: np.ndarray, factor: int = 4) -> float:
    """sup|f| estimated on a band-limited refinement of the samples."""
    return float(np.abs(upsample(values, factor)).max())


# ---------------------------------------------------------------------------
# Fourier multipliers
# ---------------------------------------------------------------------------

def frac_laplacian(f: Field, alpha: float) -> Field:
    """Lambda^alpha f = (-Delta)^{alpha/2} f via the multiplier |k|^alpha."""
    alpha = check_alpha(alpha)
    g = f.grid
    ah = rfft(f.values) * g.rkmag() ** alpha
    return Field(g, irfft(ah, g.shape))


def partial(f: Field, axis: int = 0) -> Field:
    g = f.grid
    return Field(g, irfft(rfft(f.values) * derivative_symbol(g.sizes, axis), g.shape))


def partial_x1(f: Field) -> Field:
    """Spectral derivative along the flow direction x1."""
    return partial(f, 0)


@lru_cache(maxsize=64)
def derivative_symbol(sizes: tuple[int, ...], axis: int) -> np.ndarray:
    """i*k_axis on the rfft layout with the Nyquist mode of that axis removed."""
    k = _rkvectors(sizes)[axis]
    sym = 1j * np.where(np.abs(k) == sizes[axis] // 2, 0.0, k)
    return np.broadcast_to(sym, _rkmag(sizes).shape).copy()


@lru_cache(maxsize=64)
def dealias_mask(sizes: tuple[int, ...]) -> np.ndarray:
    """2/3-rule mask on the rfft layout: keep |k_i| <= N_i/3 on every axis."""
    ks = _rkvectors(sizes)
    keep = np.ones(_rkmag(sizes).shape, dtype=bool)
    for k, n in zip(ks, sizes):
        keep &= np.abs(k) <= n // 3
    return keep.astype(float)


def dealias(f: Field) -> Field:
    g = f.grid
    return Field(g, irfft(rfft(f.values) * dealias_mask(g.sizes), g.shape))


# ---------------------------------------------------------------------------
# Kernel form
# ---------------------------------------------------------------------------

def kernel_normalization(ndims: int, alpha: float) -> float:
    """c_{n,alpha} making c * p.v.int (f(x)-f(x+z)) |z|^{-n-alpha} dz equal |k|^alpha."""
    return 2.0**alpha * gamma((ndims + alpha) / 2) / (np.pi ** (ndims / 2) * abs(gamma(-alpha / 2)))


def _em_tail(b: np.ndarray, start: int, s: float) -> np.ndarray:
    """sum_{k>=start} (b + 2pi k)^{-s} by Euler-Maclaurin (integral + endpoint terms)."""
    c = TWO_PI
    x = b + c * start
    total = x ** (1.0 - s) / (c * (s - 1.0)) + 0.5 * x ** (-s)
    # -B2/2! g'(a) + ... with g^{(j)} = (-s)_j c^j x^{-s-j} (falling factorial)
    bern = ((2, 1.0 / 6.0), (4, -1.0 / 30.0), (6, 1.0 / 42.0), (8, -1.0 / 30.0))
    for order, b2j in bern:
        j = order - 1
        fall = 1.0
        for i in range(j):
            fall *= -s - i
        total = total - b2j / math.factorial(order) * fall * c**j * x ** (-s - j)
    return total


@lru_cache(maxsize=8)
def _square_tail_factor(alpha: float) -> float:
    """int_0^{2pi} max(|cos|,|sin|)^alpha dtheta."""
    val, _ = integrate.quad(lambda t: np.cos(t) ** alpha, 0.0, np.pi / 4, epsabs=0.0, epsrel=1e-12)
    return 8.0 * val


def periodized_kernel(z, alpha: float, *, ndims: int = 1, images: int = 64, tail: bool = True):
    """phi_alpha(z) = sum_{k in Z^n} |z + 2pi k|^{-(n+alpha)}.

    The lattice sum is taken over |k|_inf <= images. With ``tail`` the remainder is
    added: Euler-Maclaurin on both half-lines for n=1, and the integral of
    |w|^{-(n+alpha)} outside the summed square for n=2.

    ``z`` is a scalar/array for n=1 and an array with trailing axis of length 2
    for n=2.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha in (0,2) required for the kernel form, got {alpha}")
    if images < 1:
        raise ValueError("images must be >= 1")
    s = ndims + alpha
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 0 if ndims == 1 else z.ndim == 1
    if ndims == 1:
        zz = np.mod(z + np.pi, TWO_PI) - np.pi
        if np.any(zz == 0.0):
            raise ValueError("periodized kernel is singular at lattice points")
        total = np.zeros_like(zz)
        for k in range(-images, images + 1):
            total += np.abs(zz + TWO_PI * k) ** (-s)
        if tail:
            total += _em_tail(zz, images + 1, s) + _em_tail(-zz, images + 1, s)
    elif ndims == 2:
        if z.shape[-1] != 2:
            raise ValueError("n=2 points need a trailing axis of length 2")
        zz = np.mod(z + np.pi, TWO_PI) - np.pi
        if np.any(np.all(zz == 0.0, axis=-1)):
            raise ValueError("periodized kernel is singular at lattice points")
        z1, z2 = zz[..., 0], zz[..., 1]
        total = np.zeros_like(z1)
        ks = np.arange(-images, images + 1) * TWO_PI
        for a in ks:
            d1 = (z1 + a) ** 2
            for b in ks:
                total += (d1 + (z2 + b) ** 2) ** (-s / 2)
        if tail:
            L = (2 * images + 1) * np.pi
            total += L ** (-alpha) / alpha * _square_tail_factor(alpha) / TWO_PI**2
    else:
        raise ValueError("only n=1 or n=2 supported")
    return float(total) if scalar else total


def kernel_infimum(ndims: int, alpha: float) -> float:
    """phi_alpha^- = inf over T^n of phi_alpha, attained at (pi, ..., pi)."""
    return periodized_kernel(np.full(ndims, np.pi) if ndims > 1 else np.pi, alpha, ndims=ndims)


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks
# ---------------------------------------------------------------------------

def _g(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_cutoff(xi) -> np.ndarray:
    """chi(xi): 1 for |xi| <= 3/4, 0 for |xi| >= 1, C-infinity in between."""
    t = (1.0 - np.abs(np.asarray(xi, dtype=float))) / 0.25
    a, b = _g(t), _g(1.0 - t)
    return a / (a + b)


def dyadic_scale(q: int) -> float:
    return 2.0**q


def lp_symbol(xi, q: int) -> np.ndarray:
    """phi_q(xi): chi for q=-1, chi(xi/2^{q+1}) - chi(xi/2^q) for q >= 0."""
    if q < -1:
        raise ValueError("q must be >= -1")
    if q == -1:
        return smooth_cutoff(xi)
    lam = dyadic_scale(q)
    return smooth_cutoff(np.asarray(xi) / (2 * lam)) - smooth_cutoff(np.asarray(xi) / lam)


def _mode_magnitude(grid: Grid, mode: str) -> np.ndarray:
    if mode == ISOTROPIC:
        return grid.rkmag()
    if mode == ANISOTROPIC:
        return np.abs(np.broadcast_to(grid.rkvectors()[0], grid.rkmag().shape))
    raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


def q_max(grid: Grid, mode: str = ISOTROPIC) -> int:
    """Largest block index needed: chi(|xi|/lambda_{Q+1}) = 1 on every grid mode."""
    top = float(_mode_magnitude(grid, mode).max())
    Q = -1
    while 0.75 * dyadic_scale(Q + 1) < top:
        Q += 1
    return Q


def _check_q(grid: Grid, q: int, mode: str) -> None:
    qm = q_max(grid, mode)
    if q < -1 or q > qm:
        raise ValueError(f"block index q={q} outside [-1, {qm}] for this grid")


def lp_project(f: Field, q: int, mode: str = ISOTROPIC) -> Field:
    """Delta_q f (isotropic) or Delta_q^{x1} f (anisotropic_x1)."""
    _check_q(f.grid, q, mode)
    mask = lp_symbol(_mode_magnitude(f.grid, mode), q)
    return Field(f.grid, irfft(rfft(f.values) * mask, f.grid.shape))


def partial_sum(f: Field, Q: int, mode: str = ANISOTROPIC) -> Field:
    """S_Q f = sum_{q=-1}^{Q} Delta_q f with symbol chi(xi / lambda_{Q+1})."""
    return Field(f.grid, partial_sum_array(f.values, f.grid, Q, mode))


def partial_sum_array(values: np.ndarray, grid: Grid, Q: int, mode: str = ANISOTROPIC) -> np.ndarray:
    if Q < -1:
        raise ValueError("Q must be >= -1")
    mask = smooth_cutoff(_mode_magnitude(grid, mode) / dyadic_scale(Q + 1))
    return irfft(rfft(values) * mask, grid.shape)


def block_norms(f: Field, s: float, p: float, mode: str = ISOTROPIC) -> list[tuple[int, float]]:
    """[(q, lambda_q^s |Delta_q f|_p) for q = -1..Q_max]."""
    out = []
    for q in range(-1, q_max(f.grid, mode) + 1):
        out.append((q, dyadic_scale(q) ** s * lp_norm(lp_project(f, q, mode).values, f.grid, p)))
    return out


def besov_norm(f: Field, s: float, p: float, r: float, mode: str = ISOTROPIC) -> float:
    """l^r over q of lambda_q^s |Delta_q f|_{L^p}."""
    if p < 1 or r < 1:
        raise ValueError("p, r >= 1 required")
    vals = np.array([v for _, v in block_norms(f, s, p, mode)])
    if math.isinf(r):
        return float(vals.max())
    return float((vals**r).sum() ** (1.0 / r))


class TailIndicator(NamedTuple):
    blocks: list[tuple[int, float]]
    decreasing: bool

    def tail(self, k: int = 3) -> list[float]:
        return [v for _, v in self.blocks[-k:]]


def c0_tail_indicator(f: Field, s: float, p: float, mode: str = ISOTROPIC) -> TailIndicator:
    """Per-block weights for inspecting limsup_q lambda_q^s |Delta_q f|_p = 0."""
    blocks = block_norms(f, s, p, mode)
    last = [v for _, v in blocks[-3:]]
    decreasing = len(last) == 3 and last[0] > last[1] > last[2]
    floor = 1e-12 * max((v for _, v in blocks), default=0.0)
    if all(v <= floor for v in last):  # round-off level: resolved to machine precision
        decreasing = True
    return TailIndicator(blocks, decreasing)


def random_trig_field(grid: Grid, rng: np.random.Generator, kmax: int, decay: float = 0.0) -> Field:
    """Real band-limited random field with modes |k_i| <= kmax and zero mean."""
    ks = grid.kvectors()
    band = np.ones(grid.shape, dtype=bool)
    for k in ks:
        band &= np.abs(k) <= kmax
    mag = np.sqrt(sum(k.astype(float) ** 2 for k in ks))
    coeffs = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * band
    if decay:
        coeffs = coeffs * np.exp(-decay * mag)
    coeffs[(0,) * grid.ndims] = 0.0
    vals = sfft.ifftn(coeffs, workers=fft_workers()).real
    return Field(grid, vals / np.abs(vals).max())
