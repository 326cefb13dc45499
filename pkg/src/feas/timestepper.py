"""Explicit Runge-Kutta integration with an adaptive CFL step."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import State, VacuumError, require_no_vacuum, rhs_arrays
from .spectral import Field, check_alpha, dealias


@dataclass(frozen=True)
class SchemeSpec:
    method: str = "ssprk3"
    cfl_safety: float = 0.5
    dt_max: float = 1e-2
    t_end: float = 1.0
    record_every: int = 10

    def __post_init__(self):
        if self.method not in ("ssprk3", "rk4"):
            raise ValueError(f"method must be 'ssprk3' or 'rk4', got {self.method!r}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    records: list = field(default_factory=list)
    flags: set = field(default_factory=set)
    status: str = "running"
    steps: int = 0
    alpha: float = float("nan")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])


class BlowUpError(RuntimeError):
    def __init__(self, time: float, reason: str, trajectory: Trajectory | None = None):
        self.time = time
        self.trajectory = trajectory
        super().__init__(f"blow-up at t = {time:.9g}: {reason}")


def cfl_dt(s: State, alpha: float, safety: float) -> float:
    """safety * min(dx1 / |u|_inf, 1 / (max rho * (N1/2)^alpha))."""
    require_no_vacuum(s.rho)
    return _cfl_arrays(s.rho.values, s.u.values, s.grid.sizes, s.grid.spacing[0], alpha, safety)


def _cfl_arrays(rho, u, sizes, dx1, alpha, safety) -> float:
    kmax = max(sizes) / 2
    umax = float(np.abs(u).max())
    adv = dx1 / umax if umax > 0 else math.inf
    diff = 1.0 / (float(rho.max()) * kmax**alpha)
    return safety * min(adv, diff)


def _stages(rho, u, dt, alpha, sizes, method, alignment):
    f = lambda r, v: rhs_arrays(r, v, sizes, alpha, alignment)  # noqa: E731
    if method == "ssprk3":
        k1r, k1u = f(rho, u)
        r1, u1 = rho + dt * k1r, u + dt * k1u
        k2r, k2u = f(r1, u1)
        r2 = 0.75 * rho + 0.25 * (r1 + dt * k2r)
        u2 = 0.75 * u + 0.25 * (u1 + dt * k2u)
        k3r, k3u = f(r2, u2)
        return (rho / 3 + 2 / 3 * (r2 + dt * k3r), u / 3 + 2 / 3 * (u2 + dt * k3u))
    k1r, k1u = f(rho, u)
    k2r, k2u = f(rho + 0.5 * dt * k1r, u + 0.5 * dt * k1u)
    k3r, k3u = f(rho + 0.5 * dt * k2r, u + 0.5 * dt * k2u)
    k4r, k4u = f(rho + dt * k3r, u + dt * k3u)
    return (rho + dt / 6 * (k1r + 2 * k2r + 2 * k3r + k4r),
            u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u))


def _advance(rho, u, t, dt, alpha, sizes, method, alignment):
    try:
        with np.errstate(over="raise", invalid="raise"):
            r, v = _stages(rho, u, dt, alpha, sizes, method, alignment)
    except (FloatingPointError, VacuumError) as exc:
        raise BlowUpError(t, str(exc)) from exc
    if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
        raise BlowUpError(t + dt, "non-finite state")
    if not float(r.min()) > 0:
        raise BlowUpError(t + dt, f"vacuum formed (min rho = {float(r.min()):.3g})")
    return r, v


def step(s: State, dt: float, alpha: float, scheme: SchemeSpec | None = None,
         alignment: bool = True) -> State:
    """One explicit RK step (SSP-RK3 by default)."""
    scheme = scheme or SchemeSpec()
    alpha = check_alpha(alpha)
    g = s.grid
    r, v = _advance(s.rho.values, s.u.values, s.time, dt, alpha, g.sizes, scheme.method, alignment)
    return State(Field(g, r), Field(g, v), s.time + dt)


def _notify(observers, state: State, traj: Trajectory) -> None:
    for obs in observers:
        rec = obs(state)
        if rec is not None:
            traj.records.append(rec)


def integrate(s0: State, alpha: float, scheme: SchemeSpec, observers=(),
              alignment: bool = True, fixed_dt: float | None = None) -> Trajectory:
    """Advance to ``scheme.t_end``; snapshots and observer records every ``record_every`` steps.

    The initial state is projected onto the dealiased band first so that the
    discrete mass and momentum are invariants of the scheme. Observers are
    callables ``obs(state) -> record | None``. On blow-up the partial
    trajectory is attached to the raised BlowUpError.
    """
    alpha = check_alpha(alpha)
    g = s0.grid
    s = State(dealias(s0.rho), dealias(s0.u), s0.time)
    require_no_vacuum(s.rho)
    traj = Trajectory(alpha=alpha)
    if alpha < 1.0:
        traj.flags.add("no_theory")
    traj.snapshots.append(s)
    _notify(observers, s, traj)

    rho, u, t = s.rho.values, s.u.values, s.time
    t_end = s0.time + scheme.t_end
    n = 0
    while t < t_end and not math.isclose(t, t_end, rel_tol=0.0, abs_tol=1e-14 * max(1.0, t_end)):
        dt = fixed_dt if fixed_dt is not None else min(
            scheme.dt_max, _cfl_arrays(rho, u, g.sizes, g.spacing[0], alpha, scheme.cfl_safety))
        last = t + dt >= t_end
        if last:
            dt = t_end - t
        try:
            rho, u = _advance(rho, u, t, dt, alpha, g.sizes, scheme.method, alignment)
        except BlowUpError as exc:
            traj.status = "blowup"
            traj.steps = n
            exc.trajectory = traj
            raise
        t = t_end if last else t + dt
        n += 1
        if n % scheme.record_every == 0 or last:
            snap = State(Field(g, rho), Field(g, u), t)
            traj.snapshots.append(snap)
            _notify(observers, snap, traj)
    traj.steps = n
    traj.status = "completed"
    return traj
