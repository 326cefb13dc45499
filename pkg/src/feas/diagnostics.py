"""Measurements along trajectories: density envelopes, entropy transport, energy laws,
flocking rates, L^{2q} relaxation envelopes and the gradient maximum-principle check.

Kernel-based constants carry the normalisation c_{n,a}: the effective kernel
infimum is ``c * inf phi_a``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from .inequalities import certified_C
from .model import State, alignment_term, entropy_field, require_no_vacuum
from .spectral import (
    TWO_PI,
    Field,
    Grid,
    frac_laplacian,
    irfft,
    kernel_infimum,
    kernel_normalization,
    lp_norm,
    partial,
    refined_sup,
    rfft,
    upsample,
)


class InsufficientDataError(ValueError):
    pass


def amplitude(u: Field) -> float:
    return u.max() - u.min()


def unit_ball_volume(n: int) -> float:
    """C(n) with V_n(r) = C(n) r^n."""
    return math.pi ** (n / 2) / gamma(n / 2 + 1)


def _refined(f: Field, factor: int = 2) -> Field:
    return Field(Grid(tuple(s * factor for s in f.grid.sizes)), upsample(f.values, factor))


def refined_extrema(rho: Field, factor: int = 4) -> tuple[float, float]:
    fine = upsample(rho.values, factor)
    return float(fine.min()), float(fine.max())


# ---------------------------------------------------------------------------
# density envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeConstants:
    """Logistic envelope constants.

    Upper: d rho+/dt <= -a rho+^2 + b rho+, with a ball of radius r around the
    maximiser, a = c C(n)/r^a - |q0|, b = c M / r^{n+a}; r is chosen so that
    a = 1 when that ball fits in the cell (then c1 = b), else r = pi.
    Lower: d rho-/dt >= -(|q0| + c phi- (2pi)^n) rho-^2 + c phi- M rho-.
    """

    c1: float
    c2: float
    c3: float
    C_n: float
    phi_minus: float
    upper_rate: float
    norm: float

    @classmethod
    def from_data(cls, mass: float, q0_inf: float, alpha: float, ndims: int) -> "EnvelopeConstants":
        if q0_inf < 0:
            raise ValueError("q0_inf must be nonnegative")
        c = kernel_normalization(ndims, alpha)
        Cn = unit_ball_volume(ndims)
        phi = kernel_infimum(ndims, alpha)
        r = min((c * Cn / (q0_inf + 1.0)) ** (1.0 / alpha), math.pi)
        a = c * Cn / r**alpha - q0_inf
        b = c * mass / r ** (ndims + alpha)
        cphi = c * phi
        c2 = cphi * mass / (q0_inf + cphi * TWO_PI**ndims)
        return cls(b / a, c2, cphi * mass, Cn, phi, b, c)


def _logistic(x0, limit, rate, t):
    t = np.asarray(t, dtype=float)
    return limit * x0 / (x0 + (limit - x0) * np.exp(-rate * t))


def logistic_envelopes(rho0: Field, q0_inf: float, alpha: float, t):
    """(lower(t), upper(t)) bounding min rho and max rho."""
    if q0_inf < 0:
        raise ValueError("q0_inf must be nonnegative")
    k = EnvelopeConstants.from_data(rho0.integral(), q0_inf, alpha, rho0.grid.ndims)
    lo0, hi0 = refined_extrema(rho0)
    lower = _logistic(lo0, k.c2, k.c3, t)
    upper = _logistic(hi0, k.c1, k.upper_rate, t)
    if np.ndim(lower) == 0:
        return float(lower), float(upper)
    return lower, upper


def a_priori_bounds(rho0: Field, q0_inf: float, alpha: float) -> tuple[float, float]:
    """Time-uniform (rho-, rho+) = (min(rho0-, c2), max(rho0+, c1))."""
    k = EnvelopeConstants.from_data(rho0.integral(), q0_inf, alpha, rho0.grid.ndims)
    lo0, hi0 = refined_extrema(rho0)
    return min(lo0, k.c2), max(hi0, k.c1)


@dataclass
class EnvelopeReport:
    ok: bool
    first_violation: tuple | None  # (t, "lower"|"upper", value, bound)
    worst_lower_margin: float  # min over records of rho_min - lower
    worst_upper_margin: float  # min over records of upper - rho_max
    slack: float


def check_envelopes(traj, alpha: float | None = None) -> EnvelopeReport:
    alpha = traj.alpha if alpha is None else alpha
    s0 = traj.snapshots[0]
    q0 = _q_sup(s0, alpha)
    lo0, hi0 = refined_extrema(s0.rho)
    slack = 1e-3 * hi0
    first = None
    wl, wu = math.inf, math.inf
    for s in traj.snapshots:
        lower, upper = logistic_envelopes(s0.rho, q0, alpha, s.time - s0.time)
        mn, mx = refined_extrema(s.rho)
        wl, wu = min(wl, mn - lower), min(wu, upper - mx)
        if first is None:
            if mn < lower - slack:
                first = (s.time, "lower", mn, lower)
            elif mx > upper + slack:
                first = (s.time, "upper", mx, upper)
    return EnvelopeReport(first is None, first, wl, wu, slack)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def _q_sup(s: State, alpha: float, factor: int = 4) -> float:
    e = entropy_field(s.rho, s.u, alpha)
    return float(np.abs(upsample(e.values, factor) / upsample(s.rho.values, factor)).max())


@dataclass
class EntropyReport:
    drift: float  # max_t | |q(t)| / |q0| - 1 |, or max_t |q(t)| when q0 = 0
    relative: bool
    q_inf: np.ndarray
    e_inf: np.ndarray
    times: np.ndarray
    uniform_bound_ok: bool
    uniform_bound_margin: float


def entropy_conservation(traj, alpha: float | None = None) -> EntropyReport:
    """Drift of sup|q| and the bound |e(t)| <= (rho+/rho-) |e0| (observed extrema)."""
    alpha = traj.alpha if alpha is None else alpha
    qs, es, lo, hi = [], [], math.inf, -math.inf
    for s in traj.snapshots:
        e = entropy_field(s.rho, s.u, alpha)
        ef = upsample(e.values, 4)
        rf = upsample(s.rho.values, 4)
        qs.append(float(np.abs(ef / rf).max()))
        es.append(float(np.abs(ef).max()))
        lo, hi = min(lo, float(rf.min())), max(hi, float(rf.max()))
    qs, es = np.array(qs), np.array(es)
    q0 = qs[0]
    if q0 > 1e-12:
        drift, rel = float(np.abs(qs / q0 - 1).max()), True
    else:
        drift, rel = float(qs.max()), False
    bound = hi / lo * es[0] + 1e-9 + 1e-6 * es[0]
    margin = float((bound - es).min())
    return EntropyReport(drift, rel, qs, es, traj.times, margin >= 0, margin)


# ---------------------------------------------------------------------------
# energies and dissipations
# ---------------------------------------------------------------------------

def dissipation_density(rho: Field, alpha: float) -> float:
    """int rho (2 rho Lambda rho - Lambda(rho^2)) = (c/2) int int (rho+rho')(rho-rho')^2 phi.

    Evaluated on a 2x zero-padded grid so every product is alias-free.
    """
    r = _refined(rho)
    lam = frac_laplacian(r, alpha)
    d = 2 * r * lam - frac_laplacian(r * r, alpha)
    return (r * d).integral()


def dissipation_velocity(rho: Field, u: Field, alpha: float) -> float:
    """-2 int rho u C(u, rho) = c int int rho rho' (u - u')^2 phi (2x padded)."""
    r, v = _refined(rho), _refined(u)
    c = alignment_term(v, r, alpha, dealias=False)
    return -2.0 * (r * v * c).integral()


def kinetic_energy(s: State) -> float:
    return 0.5 * (s.rho * s.u * s.u).integral()


def lp_deviation(rho: Field, p: float) -> float:
    """|rho - m|_p with m the mean density."""
    m = rho.integral() / TWO_PI**rho.grid.ndims
    return lp_norm(rho.values - m, rho.grid, p)


def _cumtrapz(y, t):
    out = np.zeros_like(y, dtype=float)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _cummin_endpoint(y, t):
    out = np.zeros_like(y, dtype=float)
    if len(y) > 1:
        out[1:] = np.cumsum(np.minimum(y[1:], y[:-1]) * np.diff(t))
    return out


@dataclass
class EnergyResiduals:
    times: np.ndarray
    res_rho: np.ndarray
    res_kinetic: np.ndarray
    energy_rho: np.ndarray
    energy_kinetic: np.ndarray
    diss_rho: np.ndarray
    diss_u: np.ndarray
    e_rho2: np.ndarray
    leray_hopf_u: np.ndarray  # KE(t) + 1/2 lower-sum int diss_u - KE(0); should be <= 0
    leray_hopf_ok: bool


def energy_series(traj, alpha: float | None = None) -> dict:
    alpha = traj.alpha if alpha is None else alpha
    rows = {k: [] for k in ("t", "energy_rho", "energy_kinetic", "diss_rho", "diss_u", "e_rho2")}
    for s in traj.snapshots:
        e = entropy_field(s.rho, s.u, alpha)
        rows["t"].append(s.time)
        rows["energy_rho"].append((s.rho * s.rho).integral())
        rows["energy_kinetic"].append(kinetic_energy(s))
        rows["diss_rho"].append(dissipation_density(s.rho, alpha))
        rows["diss_u"].append(dissipation_velocity(s.rho, s.u, alpha))
        r, ef = _refined(s.rho), _refined(e)
        rows["e_rho2"].append((ef * r * r).integral())
    return {k: np.array(v) for k, v in rows.items()}


def energy_residuals(traj, alpha: float | None = None) -> EnergyResiduals:
    """Residuals of the two energy equalities with trapezoid time integrals.

    d/dt int rho^2 = -int e rho^2 - D_rho
    d/dt (1/2) int rho u^2 = -(1/2) D_u   with D_u = c int int rho rho' (u-u')^2 phi
    """
    z = energy_series(traj, alpha)
    t = z["t"]
    res_rho = z["energy_rho"] - z["energy_rho"][0] + _cumtrapz(z["diss_rho"] + z["e_rho2"], t)
    res_kin = z["energy_kinetic"] - z["energy_kinetic"][0] + 0.5 * _cumtrapz(z["diss_u"], t)
    lh = z["energy_kinetic"] - z["energy_kinetic"][0] + 0.5 * _cummin_endpoint(z["diss_u"], t)
    tol = 1e-10 * max(z["energy_kinetic"][0], 1e-300)
    return EnergyResiduals(t, res_rho, res_kin, z["energy_rho"], z["energy_kinetic"],
                           z["diss_rho"], z["diss_u"], z["e_rho2"], lh, bool(np.all(lh <= tol)))


# ---------------------------------------------------------------------------
# L^{2q} relaxation envelope
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallRates:
    X: float
    Y: float
    C_q: float
    applicable: bool


def gronwall_rates(q: int, e0_inf: float, rho_minus: float, rho_plus: float, alpha: float,
                   *, m: float, ndims: int = 1, C_q: float | None = None) -> GronwallRates:
    """Decay rate X and source Y of (1/2q) d/dt |r|^{2q} <= -X |r|^{2q} + Y.

    The dissipative term is int F(r) Lambda r = (c/2) int int Psi |r - r'|^{2q} phi, so the
    rate is (1/2) c4 c5 with c4 = C(q) rho-, c5 = 2 (2pi)^n c phi-.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if C_q is None:
        C_q = certified_C(q, rho_minus, rho_plus, m)
    cphi = kernel_normalization(ndims, alpha) * kernel_infimum(ndims, alpha)
    c4 = C_q * rho_minus
    c5 = 2 * TWO_PI**ndims * cphi
    ratio = rho_plus / rho_minus * e0_inf
    X = 0.5 * c4 * c5 - (1 + m) * (2 * q - 1) / (2 * q) * ratio
    Y = m / (2 * q) * TWO_PI**ndims * ratio
    return GronwallRates(X, Y, C_q, X > 0)


def gronwall_envelope(q: int, e0_inf: float, rho_minus: float, rho_plus: float, alpha: float,
                      r0_2q: float, t, *, m: float, ndims: int = 1, C_q: float | None = None):
    """|r0|^{2q} e^{-2qXt} + (Y/X)(1 - e^{-2qXt}); NaN when X <= 0 (inapplicable)."""
    g = gronwall_rates(q, e0_inf, rho_minus, rho_plus, alpha, m=m, ndims=ndims, C_q=C_q)
    t = np.asarray(t, dtype=float)
    if not g.applicable:
        out = np.full(t.shape, np.nan)
    else:
        decay = np.exp(-2 * q * g.X * t)
        out = r0_2q * decay + g.Y / g.X * (1 - decay)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# per-record observer
# ---------------------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    t: float
    rho_min: float
    rho_max: float
    amplitude: float
    q_inf: float
    e_inf: float
    grad_u_inf: float
    grad_rho_inf: float
    energy_rho: float
    energy_kin: float
    diss_rho: float
    diss_u: float
    env_lower: float
    env_upper: float
    lp_dev: dict = field(default_factory=dict)
    gronwall: dict = field(default_factory=dict)

    def row(self, p_list, q_list) -> list[float]:
        base = [self.t, self.rho_min, self.rho_max, self.amplitude, self.q_inf, self.e_inf,
                self.grad_u_inf, self.grad_rho_inf, self.energy_rho, self.energy_kin,
                self.diss_rho, self.diss_u, self.env_lower, self.env_upper]
        return base + [self.lp_dev[p] for p in p_list] + [self.gronwall[q] for q in q_list]


def grad_sup(f: Field) -> float:
    comps = [partial(f, ax).values for ax in range(f.grid.ndims)]
    return float(np.sqrt(sum(c * c for c in comps)).max())


class DiagnosticsRecorder:
    """Observer building a DiagnosticsRecord per recorded state.

    Envelope constants are fixed from the first state it sees. The L^{2q}
    envelope uses the time-uniform a-priori density bounds and a certified C(q).
    """

    def __init__(self, alpha: float, p_list=(2.0, 4.0), q_list=(1, 2)):
        self.alpha = float(alpha)
        self.p_list = tuple(float(p) for p in p_list)
        self.q_list = tuple(int(q) for q in q_list)
        self._t0 = None

    def _setup(self, s: State):
        a = self.alpha
        self._t0 = s.time
        self._rho0 = s.rho
        self._q0 = _q_sup(s, a)
        e0 = entropy_field(s.rho, s.u, a)
        self._e0 = refined_sup(e0.values)
        rmin, rmax = a_priori_bounds(s.rho, self._q0, a)
        n = s.grid.ndims
        m = s.rho.integral() / TWO_PI**n
        self._gron = {}
        for q in self.q_list:
            r0 = lp_norm(s.rho.values - m, s.grid, 2 * q) ** (2 * q)
            self._gron[q] = (gronwall_rates(q, self._e0, rmin, rmax, a, m=m, ndims=n), r0)

    def gronwall_value(self, q: int, t: float) -> float:
        g, r0 = self._gron[q]
        if not g.applicable:
            return math.nan
        decay = math.exp(-2 * q * g.X * t)
        return r0 * decay + g.Y / g.X * (1 - decay)

    def __call__(self, s: State) -> DiagnosticsRecord:
        require_no_vacuum(s.rho)
        if self._t0 is None:
            self._setup(s)
        a = self.alpha
        t = s.time - self._t0
        e = entropy_field(s.rho, s.u, a)
        ef, rf = upsample(e.values, 4), upsample(s.rho.values, 4)
        lower, upper = logistic_envelopes(self._rho0, self._q0, a, t)
        return DiagnosticsRecord(
            t=s.time,
            rho_min=float(rf.min()),
            rho_max=float(rf.max()),
            amplitude=amplitude(s.u),
            q_inf=float(np.abs(ef / rf).max()),
            e_inf=float(np.abs(ef).max()),
            grad_u_inf=grad_sup(s.u),
            grad_rho_inf=grad_sup(s.rho),
            energy_rho=(s.rho * s.rho).integral(),
            energy_kin=kinetic_energy(s),
            diss_rho=dissipation_density(s.rho, a),
            diss_u=dissipation_velocity(s.rho, s.u, a),
            env_lower=lower,
            env_upper=upper,
            lp_dev={p: lp_deviation(s.rho, p) for p in self.p_list},
            gronwall={q: self.gronwall_value(q, t) for q in self.q_list},
        )


# ---------------------------------------------------------------------------
# flocking
# ---------------------------------------------------------------------------

@dataclass
class RateFit:
    rate: float
    r2: float
    n_points: int


def _fit_log_rate(t, y, floor: float) -> RateFit:
    t, y = np.asarray(t), np.asarray(y)
    half = len(t) // 2
    t, y = t[half:], y[half:]
    keep = y > floor
    if keep.sum() < 3:
        return RateFit(-math.inf, math.nan, int(keep.sum()))
    t, ly = t[keep], np.log(y[keep])
    A = np.vstack([t, np.ones_like(t)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float(((ly - pred) ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(coef[0]), r2, int(keep.sum()))


def moving_frame(rho: Field, shift: float) -> Field:
    """rho(x1 + shift, x_) by a spectral phase shift."""
    g = rho.grid
    k1 = g.rkvectors()[0]
    ph = np.exp(1j * k1 * shift)
    if g.sizes[0] % 2 == 0:
        # keep the Nyquist row real
        ph = np.where(np.abs(k1) == g.sizes[0] // 2, np.cos(k1 * shift), ph)
    return Field(g, irfft(rfft(rho.values) * ph, g.shape))


@dataclass
class FlockMetrics:
    ubar: float
    align: RateFit
    grad: RateFit
    rho_infty: Field
    times: np.ndarray
    deviation: np.ndarray  # |u - ubar|_inf
    grad_u: np.ndarray
    moving_frame_residual: np.ndarray

    @property
    def align_rate(self) -> float:
        return self.align.rate

    @property
    def grad_rate(self) -> float:
        return self.grad.rate


def flock_metrics(traj, min_records: int = 20, floor: float = 1e-12) -> FlockMetrics:
    snaps = traj.snapshots
    if len(snaps) < min_records:
        raise InsufficientDataError(f"need >= {min_records} snapshots, got {len(snaps)}")
    ubar = snaps[0].ubar
    t0 = snaps[0].time
    times = np.array([s.time for s in snaps])
    dev = np.array([float(np.abs(s.u.values - ubar).max()) for s in snaps])
    gu = np.array([grad_sup(s.u) for s in snaps])
    scale = max(dev[0], gu[0], 1e-300)
    frames = [moving_frame(s.rho, ubar * (s.time - t0)) for s in snaps]
    rho_inf = frames[-1]
    resid = np.array([float(np.abs(f.values - rho_inf.values).max()) for f in frames])
    return FlockMetrics(ubar, _fit_log_rate(times, dev, floor * scale),
                        _fit_log_rate(times, gu, floor * scale), rho_inf, times, dev, gu, resid)


# ---------------------------------------------------------------------------
# gradient maximum principle
# ---------------------------------------------------------------------------

def gradient_dissipation(u: Field, factor: int = 2) -> tuple[Field, Field]:
    """D(grad u)(x) = int |grad u(x+z) - grad u(x)|^2 / |z|^{n+1} dz and |grad u|^2.

    Uses the identity c_{n,1} int (g(x+z)-g(x))^2 phi_1(z) dz = 2 g Lambda g - Lambda(g^2)
    per gradient component, on a refined grid.
    """
    c = kernel_normalization(u.grid.ndims, 1.0)
    uf = _refined(u, factor)
    D = None
    G2 = None
    for ax in range(u.grid.ndims):
        gx = partial(uf, ax)
        term = 2 * gx * frac_laplacian(gx, 1.0) - frac_laplacian(gx * gx, 1.0)
        D = term if D is None else D + term
        G2 = gx * gx if G2 is None else G2 + gx * gx
    return D / c, G2


@dataclass
class MaxPrincipleCheck:
    min_gap: float  # min_x D - B|grad u|^2 + c B^3 A^2
    c_needed: float  # smallest c with gap >= 0 for this field and B


def nonlinear_max_principle_check(u: Field, B: float, c: float = 1.0) -> MaxPrincipleCheck:
    D, G2 = gradient_dissipation(u)
    A = amplitude(u)
    deficit = B * G2.values - D.values
    gap = float((-deficit + c * B**3 * A * A).min())
    if A == 0.0:
        need = 0.0 if deficit.max() <= 1e-12 else math.inf
    else:
        need = max(0.0, float(deficit.max()) / (B**3 * A * A))
    return MaxPrincipleCheck(gap, need)


def smooth_battery(grid: Grid, n_fields: int = 10, seed: int = 0, kmax: int = 4) -> list[Field]:
    """Grid-independent smooth test fields: fixed random trig polynomials, |k_i| <= kmax."""
    rng = np.random.default_rng(seed)
    x = grid.coords()
    out = []
    ranges = [range(-kmax, kmax + 1)] * grid.ndims
    modes = [k for k in np.array(np.meshgrid(*ranges, indexing="ij")).reshape(grid.ndims, -1).T
             if any(k)]
    for _ in range(n_fields):
        vals = np.zeros(grid.shape)
        for k in modes:
            a, b = rng.standard_normal(2) / (1.0 + float(np.dot(k, k)))
            ph = sum(int(ki) * xi for ki, xi in zip(k, x))
            vals = vals + a * np.cos(ph) + b * np.sin(ph)
        out.append(Field(grid, vals))
    return out


def c_estimate(fields, Bs=(1.0, 2.0, 4.0, 8.0)) -> float:
    """Smallest c making D - B|grad u|^2 + c B^3 A^2 >= 0 over all fields and B."""
    worst = 0.0
    for u in fields:
        D, G2 = gradient_dissipation(u)
        A = amplitude(u)
        for B in Bs:
            deficit = float((B * G2.values - D.values).max())
            if A > 0:
                worst = max(worst, deficit / (B**3 * A * A))
    return worst
