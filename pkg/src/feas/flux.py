"""Scale-by-scale kinetic energy budget with x1-only Littlewood-Paley filtering.

With S = S_Q^{x1} and U = S(rho u) / S(rho):

    E_Q   = 1/2 int S(rho u)^2 / S(rho)
    Pi_Q  = int (S(rho u^2) - U S(rho u)) d1 U
    eps_Q = -int_0^t int S(rho C(u, rho)) U

and E_Q(t) - E_Q(0) = int_0^t Pi_Q - eps_Q(t). All products are formed on a
2x padded grid so that the filters see them without aliasing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagnostics import _cumtrapz
from .model import State, alignment_term
from .spectral import (
    ANISOTROPIC,
    Field,
    Grid,
    c0_tail_indicator,
    lp_norm,
    partial_x1,
    partial_sum_array,
    upsample,
)

PAD = 2


class FilteredVacuumError(ValueError):
    def __init__(self, Q: int, t: float, value: float):
        self.Q, self.t, self.value = Q, t, value
        super().__init__(f"filtered density S_{Q} rho has min {value:.3g} <= 0 at t = {t:.6g}")


@dataclass
class _Filtered:
    grid: Grid
    rho: np.ndarray
    u: np.ndarray
    S_rho: np.ndarray
    S_m: np.ndarray
    U: np.ndarray


def _filtered(s: State, Q: int) -> _Filtered:
    g = Grid(tuple(n * PAD for n in s.grid.sizes))
    rho = upsample(s.rho.values, PAD)
    u = upsample(s.u.values, PAD)
    S_rho = partial_sum_array(rho, g, Q, ANISOTROPIC)
    lo = float(S_rho.min())
    if not lo > 0:
        raise FilteredVacuumError(Q, s.time, lo)
    S_m = partial_sum_array(rho * u, g, Q, ANISOTROPIC)
    return _Filtered(g, rho, u, S_rho, S_m, S_m / S_rho)


def filtered_energy(s: State, Q: int) -> float:
    f = _filtered(s, Q)
    return 0.5 * float((f.S_m**2 / f.S_rho).sum()) * f.grid.cell_volume


def flux_PiQ(s: State, Q: int) -> float:
    f = _filtered(s, Q)
    S_mu = partial_sum_array(f.rho * f.u * f.u, f.grid, Q, ANISOTROPIC)
    dU = partial_x1(Field(f.grid, f.U)).values
    return float(((S_mu - f.U * f.S_m) * dU).sum()) * f.grid.cell_volume


def alignment_rate(s: State, Q: int, alpha: float) -> float:
    """int S(rho C) U at one instant (the integrand of -d eps_Q / dt)."""
    f = _filtered(s, Q)
    r, v = Field(f.grid, f.rho), Field(f.grid, f.u)
    rc = r.values * alignment_term(v, r, alpha, dealias=False).values
    S_rc = partial_sum_array(rc, f.grid, Q, ANISOTROPIC)
    return float((S_rc * f.U).sum()) * f.grid.cell_volume


def alignment_transfer_epsQ(traj, Q: int, alpha: float | None = None) -> np.ndarray:
    """eps_Q(t) at every snapshot (trapezoid in time)."""
    alpha = traj.alpha if alpha is None else alpha
    t = traj.times
    rate = np.array([alignment_rate(s, Q, alpha) for s in traj.snapshots])
    return -_cumtrapz(rate, t)


@dataclass
class BudgetSeries:
    Q: int
    t: np.ndarray
    E_Q: np.ndarray
    Pi_Q: np.ndarray
    flux_int: np.ndarray
    eps_Q: np.ndarray
    residual: np.ndarray
    flags: list = field(default_factory=list)  # (t, message) for excluded snapshots


def budget_closure(traj, Q: int, alpha: float | None = None) -> BudgetSeries:
    """E_Q, int Pi_Q, eps_Q and the closure residual; filtered-vacuum points are dropped."""
    alpha = traj.alpha if alpha is None else alpha
    ts, E, Pi, R, flags = [], [], [], [], []
    for s in traj.snapshots:
        try:
            E.append(filtered_energy(s, Q))
            Pi.append(flux_PiQ(s, Q))
            R.append(alignment_rate(s, Q, alpha))
            ts.append(s.time)
        except FilteredVacuumError as exc:
            flags.append((s.time, str(exc)))
    t = np.array(ts)
    E, Pi, R = np.array(E), np.array(Pi), np.array(R)
    if t.size == 0:
        empty = np.array([])
        return BudgetSeries(Q, empty, empty, empty, empty, empty, empty, flags)
    flux_int = _cumtrapz(Pi, t)
    eps = -_cumtrapz(R, t)
    resid = E - E[0] - flux_int + eps
    return BudgetSeries(Q, t, E, Pi, flux_int, eps, resid, flags)


@dataclass
class OnsagerIndicator:
    sup: float  # sup_q lambda_q^{1/3} |Delta_q^{x1} f|_3
    blocks: list
    tail_decreasing: bool
    l3: float


def onsager_indicator(f: Field) -> OnsagerIndicator:
    tail = c0_tail_indicator(f, 1.0 / 3.0, 3.0, ANISOTROPIC)
    vals = [v for _, v in tail.blocks]
    return OnsagerIndicator(max(vals) if vals else 0.0, tail.blocks, tail.decreasing,
                            lp_norm(f.values, f.grid, 3.0))
