"""Unidirectional fractional alignment system: right-hand side, entropy, initial data.

    rho_t + d1(rho u) = 0
    u_t + d1(u^2 / 2) = C(u, rho) = -Lambda^a(rho u) + u Lambda^a(rho)
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import quadrature
from .spectral import (
    Field,
    Grid,
    check_alpha,
    dealias_mask,
    derivative_symbol,
    irfft,
    random_trig_field,
    rfft,
    _rkmag,
)


class VacuumError(ValueError):
    """Density touched zero (or went negative) somewhere on the grid."""


class SolvabilityError(ValueError):
    def __init__(self, modes):
        self.modes = [tuple(int(k) for k in m) for m in modes]
        shown = ", ".join(str(m) for m in self.modes[:12])
        more = "" if len(self.modes) <= 12 else f" (+{len(self.modes) - 12} more)"
        super().__init__(
            "d1 u = Lambda^a rho is not solvable: density has modes with k1 = 0 "
            f"(or k1 at Nyquist): {shown}{more}"
        )


class AccuracyWarning(UserWarning):
    """Kernel quadrature asked to act on a field with content near the grid cutoff."""


@dataclass(frozen=True)
class State:
    rho: Field
    u: Field
    time: float = 0.0

    def __post_init__(self):
        if self.rho.grid != self.u.grid:
            raise ValueError("rho and u must share a grid")

    @property
    def grid(self) -> Grid:
        return self.rho.grid

    @property
    def mass(self) -> float:
        return self.rho.integral()

    @property
    def momentum(self) -> float:
        return (self.rho * self.u).integral()

    @property
    def ubar(self) -> float:
        return self.momentum / self.mass


@dataclass(frozen=True)
class Entropy:
    e: Field
    q: Field


def require_no_vacuum(rho: Field | np.ndarray) -> None:
    vals = rho.values if isinstance(rho, Field) else rho
    lo = float(np.min(vals))
    if not lo > 0.0:
        raise VacuumError(f"vacuum: min rho = {lo:.6g}")


# ---------------------------------------------------------------------------
# alignment and right-hand side
# ---------------------------------------------------------------------------

def _product(a: np.ndarray, b: np.ndarray, mask) -> np.ndarray:
    """Spectrum of a*b, dealiased when a mask is given."""
    ph = rfft(a * b)
    return ph * mask if mask is not None else ph


def _is_under_resolved(f: Field, frac: float = 8.0, tol: float = 1e-10) -> bool:
    fh = np.abs(f.spectral)
    total = float(fh.sum())
    if total == 0.0:
        return False
    high = np.zeros(f.grid.shape, dtype=bool)
    for k, n in zip(f.grid.kvectors(), f.grid.sizes):
        high |= np.abs(k) > n / frac
    return float(fh[high].sum()) > tol * total


def alignment_term(u: Field, rho: Field, alpha: float, path: str = "spectral",
                   dealias: bool = True) -> Field:
    """C(u, rho) = -Lambda^a(rho u) + Lambda^a(rho) u.

    ``path="spectral"`` uses the |k|^a multiplier; ``path="kernel"`` evaluates the
    principal-value integral by direct quadrature (slow, for cross-checks) and
    emits an AccuracyWarning when the inputs carry content above N/8.
    """
    alpha = check_alpha(alpha)
    if path == "kernel":
        if _is_under_resolved(u) or _is_under_resolved(rho):
            warnings.warn("kernel path on under-resolved fields; expect O(h^{2-alpha}) error",
                          AccuracyWarning, stacklevel=2)
        return quadrature.kernel_alignment(u, rho, alpha)
    if path != "spectral":
        raise ValueError(f"unknown path {path!r}")
    g = rho.grid
    mask = dealias_mask(g.sizes) if dealias else None
    lam = g.rkmag() ** alpha
    rho_u = _product(rho.values, u.values, mask)
    lam_rho = irfft(rfft(rho.values) * lam, g.shape)
    out = irfft(-lam * rho_u + _product(lam_rho, u.values, mask), g.shape)
    return Field(g, out)


def rhs_arrays(rho: np.ndarray, u: np.ndarray, sizes: tuple[int, ...], alpha: float,
               alignment: bool = True, dealias: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Array fast path of ``rhs`` used by the time stepper."""
    require_no_vacuum(rho)
    shape = rho.shape
    mask = dealias_mask(sizes) if dealias else None
    d1 = derivative_symbol(sizes, 0)
    rho_u = _product(rho, u, mask)
    drho = irfft(-d1 * rho_u, shape)
    du_h = -0.5 * d1 * _product(u, u, mask)
    if alignment:
        lam = _rkmag(sizes) ** alpha
        lam_rho = irfft(rfft(rho) * lam, shape)
        du_h = du_h - lam * rho_u + _product(lam_rho, u, mask)
    du = irfft(du_h, shape)
    if not (np.all(np.isfinite(drho)) and np.all(np.isfinite(du))):
        raise FloatingPointError("non-finite right-hand side")
    return drho, du


def rhs(s: State, alpha: float, alignment: bool = True, dealias: bool = True) -> tuple[Field, Field]:
    """(d rho/dt, d u/dt) with 2/3-rule dealiasing of every quadratic product."""
    alpha = check_alpha(alpha)
    g = s.grid
    drho, du = rhs_arrays(s.rho.values, s.u.values, g.sizes, alpha, alignment, dealias)
    return Field(g, drho), Field(g, du)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def entropy_field(rho: Field, u: Field, alpha: float) -> Field:
    g = rho.grid
    ah = rfft(u.values) * derivative_symbol(g.sizes, 0) - rfft(rho.values) * g.rkmag() ** check_alpha(alpha)
    return Field(g, irfft(ah, g.shape))


def entropy_of(s: State, alpha: float) -> Entropy:
    """e = d1 u - Lambda^a rho and q = e / rho."""
    require_no_vacuum(s.rho)
    e = entropy_field(s.rho, s.u, alpha)
    return Entropy(e, e / s.rho)


def _test_battery(grid: Grid, kmax: int = 2):
    """Low trig modes: 1, cos(k.x), sin(k.x) with |k_i| <= kmax (half-space)."""
    x = grid.coords()
    yield (0,) * grid.ndims, np.ones(grid.shape), np.zeros(grid.shape)
    ranges = [range(-kmax, kmax + 1)] * grid.ndims
    for k in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(grid.ndims, -1).T:
        nz = np.nonzero(k)[0]
        if nz.size == 0 or k[nz[0]] < 0:
            continue
        phase = sum(int(ki) * xi for ki, xi in zip(k, x))
        kk = tuple(int(v) for v in k)
        yield kk, np.cos(phase), np.sin(phase)


def check_compatibility(rho: Field, u: Field, e: Field, alpha: float) -> float:
    """max over low-mode test functions phi of |int e phi + u d1 phi + rho Lambda^a phi|.

    Each term is integrated by the trapezoid rule; for trig-polynomial data this
    is exact, so a consistent triple gives round-off only.
    """
    alpha = check_alpha(alpha)
    g = rho.grid
    dv = g.cell_volume
    worst = 0.0
    for k, c, s_ in _test_battery(g):
        k1 = k[0]
        mag = float(np.sqrt(sum(ki * ki for ki in k))) ** alpha if any(k) else 0.0
        # phi = cos: d1 phi = -k1 sin, Lambda phi = |k|^a cos ; phi = sin: d1 = k1 cos
        for phi, d1phi, lamphi in ((c, -k1 * s_, mag * c), (s_, k1 * c, mag * s_)):
            if not np.any(phi):
                continue
            val = (e.values * phi + u.values * d1phi + rho.values * lamphi).sum() * dv
            worst = max(worst, abs(float(val)))
    return worst


# ---------------------------------------------------------------------------
# null-entropy data
# ---------------------------------------------------------------------------

def _unsolvable_mask(grid: Grid) -> np.ndarray:
    k1 = grid.kvectors()[0]
    bad = (k1 == 0) | (np.abs(k1) == grid.sizes[0] // 2)
    bad[(0,) * grid.ndims] = False
    return bad


def project_to_solvable(rho0: Field) -> Field:
    """Drop density modes with k1 = 0 (k != 0) or k1 at Nyquist. Opt-in only."""
    coeffs = rho0.spectral.copy()
    coeffs[_unsolvable_mask(rho0.grid)] = 0.0
    return Field.from_spectral(rho0.grid, coeffs)


def null_entropy_velocity(rho0: Field, ubar: float, alpha: float, tol: float = 1e-12) -> Field:
    """u0 with d1 u0 = Lambda^a rho0 and int rho0 u0 / int rho0 = ubar."""
    alpha = check_alpha(alpha)
    require_no_vacuum(rho0)
    g = rho0.grid
    rh = rho0.spectral
    bad = _unsolvable_mask(g) & (np.abs(rh) > tol * max(1.0, float(np.abs(rh).max())))
    if np.any(bad):
        ks = np.stack([k[bad] for k in g.kvectors()], axis=-1)
        raise SolvabilityError(ks)
    k1 = g.kvectors()[0].astype(float)
    mag = np.sqrt(sum(k.astype(float) ** 2 for k in g.kvectors()))
    uh = np.zeros_like(rh)
    ok = ~_unsolvable_mask(g) & (k1 != 0)
    uh[ok] = mag[ok] ** alpha * rh[ok] / (1j * k1[ok])
    w = Field.from_spectral(g, uh)
    return _with_mean_velocity(rho0, w, ubar)


def _with_mean_velocity(rho: Field, u: Field, ubar: float) -> Field:
    shift = ubar - (rho * u).integral() / rho.integral()
    return u + shift


# ---------------------------------------------------------------------------
# initial-data recipes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrigPolynomial:
    """Random band-limited data: rho = floor + amp (1 + f), u = ubar + u_amp g.

    f, g are zero-mean random trig polynomials with |k_i| <= n_modes and
    sup-norm 1 on the grid, so min rho >= rho_floor.
    """

    seed: int = 0
    n_modes: int = 4
    rho_floor: float = 0.5
    amplitude: float = 0.3
    u_amplitude: float = 0.3
    ubar: float = 0.0
    x1_modes_only: bool = False


@dataclass(frozen=True)
class DensityModes:
    """rho = mean + sum a cos(k.x) + b sin(k.x) over ``terms`` = ((k, a, b), ...)."""

    mean: float = 1.0
    terms: tuple = ()

    def field(self, grid: Grid) -> Field:
        x = grid.coords()
        vals = np.full(grid.shape, float(self.mean))
        for k, a, b in self.terms:
            k = tuple(k) + (0,) * (grid.ndims - len(k))
            phase = sum(ki * xi for ki, xi in zip(k, x))
            vals = vals + a * np.cos(phase) + b * np.sin(phase)
        return Field(grid, vals)


@dataclass(frozen=True)
class NullEntropy:
    """u0 solving d1 u0 = Lambda^a rho0 plus eps sin(x1), so e0 = eps cos(x1)."""

    rho: Union[TrigPolynomial, DensityModes] = field(default_factory=DensityModes)
    ubar: float = 0.0
    entropy_amplitude: float = 0.0


@dataclass(frozen=True)
class Snapshot:
    path: str


ICRecipe = Union[TrigPolynomial, DensityModes, NullEntropy, Snapshot]


def _trig_state(r: TrigPolynomial, grid: Grid) -> State:
    if r.rho_floor <= 0:
        raise ValueError("rho_floor must be positive")
    rng = np.random.default_rng(r.seed)
    f = random_trig_field(grid, rng, r.n_modes)
    g = random_trig_field(grid, rng, r.n_modes)
    if r.x1_modes_only:
        f, g = project_to_solvable(f), project_to_solvable(g)
        f = f / float(np.abs(f.values).max())
    rho = r.rho_floor + r.amplitude * (1.0 + f)
    u = _with_mean_velocity(rho, r.u_amplitude * g, r.ubar)
    return State(rho, u, 0.0)


def make_initial_data(recipe: ICRecipe, grid: Grid | None = None, alpha: float = 1.0) -> State:
    """Build a State from a recipe; rejects data with vacuum."""
    if isinstance(recipe, Snapshot):
        from .io import read_snapshot

        s, _ = read_snapshot(recipe.path)
    else:
        if grid is None:
            raise ValueError("a grid is required for this recipe")
        if isinstance(recipe, TrigPolynomial):
            s = _trig_state(recipe, grid)
        elif isinstance(recipe, DensityModes):
            rho = recipe.field(grid)
            s = State(rho, Field.constant(grid, 0.0))
        elif isinstance(recipe, NullEntropy):
            if isinstance(recipe.rho, TrigPolynomial):
                rho = _trig_state(recipe.rho, grid).rho
            else:
                rho = recipe.rho.field(grid)
            require_no_vacuum(rho)
            u = null_entropy_velocity(rho, 0.0, alpha)
            if recipe.entropy_amplitude:
                u = u + Field.from_function(grid, lambda *x: recipe.entropy_amplitude * np.sin(x[0]))
            s = State(rho, _with_mean_velocity(rho, u, recipe.ubar))
        else:
            raise TypeError(f"unknown initial-data recipe {recipe!r}")
    lo = s.rho.min()
    if not lo > 0:
        raise VacuumError(f"initial density has vacuum: min rho = {lo:.6g}")
    floor = getattr(recipe, "rho_floor", None)
    if floor is not None and lo < floor - 1e-12:
        raise VacuumError(f"initial density below floor {floor}: min rho = {lo:.6g}")
    return s
