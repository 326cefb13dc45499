"""Grid-sweep certification of the two-variable inequalities behind the L^{2q} decay estimate.

f_q(X, Y) = ((2q-1)/2q) (X^{2q} - Y^{2q}) / (X-Y)^{2q-1} + m (X^{2q-1} - Y^{2q-1}) / (X-Y)^{2q-1}

With h_j(X, Y) = sum_{i=0}^{j} X^i Y^{j-i} (complete homogeneous polynomial),
X^{j+1} - Y^{j+1} = (X - Y) h_j, so

f_q = [((2q-1)/2q) h_{2q-1} + m h_{2q-2}] / (X - Y)^{2q-2}.

The numerator form is evaluated directly, which is accurate up to the
diagonal; for q >= 2 the quotient is +inf on X = Y unless the numerator
vanishes there (only at X = Y = 0, handled separately).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .spectral import Field, TWO_PI


def _h(j: int, x, y):
    """Complete homogeneous symmetric polynomial of degree j in two variables (Horner)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # Horner in x with coefficients y^{j-i}: acc_i = acc_{i-1} * x + y^i
    acc = np.ones(np.broadcast(x, y).shape)
    ypow = np.ones_like(acc)
    for _ in range(j):
        ypow = ypow * y
        acc = acc * x + ypow
    return acc


def _origin_value(q: int, m: float) -> float:
    """liminf of f_q at X = Y = 0: m * min over the unit circle of h_{2q-2}/(X-Y)^{2q-2}.

    The first term is homogeneous of degree 1 and vanishes at the origin; the
    second is homogeneous of degree 0 with minimum at X = -Y for every q.
    """
    if q == 1:
        return m
    j = 2 * q - 2
    # along X = 1, Y = -1: h_j(1,-1) = 1 (j even); (X-Y)^j = 2^j
    # minimise over the direction numerically to be safe
    th = np.linspace(0.0, np.pi, 20001)
    x, y = np.cos(th), np.sin(th)
    d = (x - y) ** j
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(d > 0, _h(j, x, y) / d, np.inf)
    return m * float(np.min(vals))


def f_q_value(X, Y, q: int, m: float):
    """f_q(X, Y); diagonal points give the algebraic limit (+inf off the origin for q >= 2)."""
    if q < 1:
        raise ValueError("q must be >= 1")
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    a = (2 * q - 1) / (2 * q)
    num = a * _h(2 * q - 1, X, Y) + m * _h(2 * q - 2, X, Y)
    if q == 1:
        out = num
    else:
        den = (X - Y) ** (2 * q - 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = num / den
        diag = den == 0
        if np.any(diag):
            origin = diag & (X == 0) & (Y == 0)
            out = np.where(diag, np.where(num > 0, np.inf, np.where(num < 0, -np.inf, np.nan)), out)
            out = np.where(origin, _origin_value(q, m), out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BoxSweep:
    q: int
    m: float
    rho_minus: float
    rho_plus: float
    resolution: int = 2001
    bounds: tuple | None = None  # (lo, hi) for X and Y; default [rho- - m, rho+ - m]

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.resolution < 101:
            raise ValueError("resolution must be >= 101")
        if not (0 < self.rho_minus <= self.m <= self.rho_plus):
            raise ValueError("need 0 < rho_minus <= m <= rho_plus")

    @property
    def box(self) -> tuple[float, float]:
        if self.bounds is not None:
            return tuple(float(b) for b in self.bounds)
        return (self.rho_minus - self.m, self.rho_plus - self.m)


@dataclass
class FqCertificate:
    q: int
    min_value: float
    argmin: tuple
    C_q: float
    status: str
    box: tuple = field(default=())
    resolution: int = 0


class CertificationError(RuntimeError):
    pass


def certify_fq_min(sweep: BoxSweep, strict: bool = True) -> FqCertificate:
    """Grid minimum of f_q over the box, polished by a bounded local minimiser."""
    q, m = sweep.q, sweep.m
    lo, hi = sweep.box
    xs = np.linspace(lo, hi, sweep.resolution)
    best, arg = math.inf, (lo, lo)
    # sweep in row blocks to keep memory flat at 2001^2
    for s in range(0, xs.size, 128):
        X, Y = np.meshgrid(xs[s:s + 128], xs, indexing="ij")
        vals = f_q_value(X, Y, q, m)
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        if vals[i, j] < best:
            best, arg = float(vals[i, j]), (float(X[i, j]), float(Y[i, j]))
    if q >= 2 and lo <= 0.0 <= hi:
        v0 = _origin_value(q, m)
        if v0 < best:
            best, arg = v0, (0.0, 0.0)
    if arg != (0.0, 0.0) and arg[0] != arg[1]:
        res = minimize(lambda p: f_q_value(p[0], p[1], q, m), np.array(arg),
                       method="L-BFGS-B", bounds=[(lo, hi), (lo, hi)],
                       options={"ftol": 1e-15, "gtol": 1e-13, "maxiter": 2000})
        if res.fun < best and np.isfinite(res.fun):
            best, arg = float(res.fun), (float(res.x[0]), float(res.x[1]))
    status = "certified" if best > 0 else "FAILED"
    cert = FqCertificate(q, best, arg, best / sweep.rho_minus, status, (lo, hi), sweep.resolution)
    if strict and best <= 0:
        raise CertificationError(f"f_{q} has nonpositive minimum {best:.3e} at {arg}")
    return cert


def certified_C(q: int, rho_minus: float, rho_plus: float, m: float, resolution: int = 401) -> float:
    """C(q) = min f_q / rho_minus on the box [rho- - m, rho+ - m]^2."""
    return certify_fq_min(BoxSweep(q, m, rho_minus, rho_plus, resolution)).C_q


# ---------------------------------------------------------------------------
# binomial remainder
# ---------------------------------------------------------------------------

def _P(X, Y, q: int):
    if q == 1:
        return 2 * X * Y
    return 2 * q * (X ** (2 * q - 1) * Y + X * Y ** (2 * q - 1))


def remainder_Rq(X, Y, q: int):
    """R_q = (X-Y)^{2q} - X^{2q} - Y^{2q} + P_q(X, Y).

    Evaluated as the binomial middle sum sum_{k=2}^{2q-2} (-1)^k C(2q,k) X^{2q-k} Y^k
    with Neumaier compensation; for q = 1 it is identically 0.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    shape = np.broadcast(X, Y).shape
    if q == 1:
        return np.zeros(shape) if shape else 0.0
    xp, yp = [np.ones(shape)], [np.ones(shape)]
    for _ in range(2 * q - 2):
        xp.append(xp[-1] * X)
        yp.append(yp[-1] * Y)
    total = np.zeros(shape)
    comp = np.zeros(shape)
    for k in range(2, 2 * q - 1):
        term = ((-1) ** k * math.comb(2 * q, k)) * xp[2 * q - k] * yp[k]
        t = total + term
        big = np.abs(total) >= np.abs(term)
        comp += np.where(big, total - t, term - t) + np.where(big, term, total)
        total = t
    out = total + comp
    return float(out) if out.ndim == 0 else out


@dataclass
class LowerPolyRow:
    q: int
    l: float
    resolution: int
    min_value: float
    argmin: tuple
    tol: float
    status: str


def certify_lowerpoly(q_max: int, l: float, resolution: int = 2001) -> list[LowerPolyRow]:
    """Sweep R_q >= -1e-12 l^{2q} on [-l, l]^2 for q = 1..q_max."""
    if resolution < 101:
        raise ValueError("resolution must be >= 101")
    xs = np.linspace(-l, l, resolution)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    rows = []
    for q in range(1, q_max + 1):
        R = remainder_Rq(X, Y, q)
        idx = np.unravel_index(int(np.argmin(R)), R.shape)
        mn = float(R[idx])
        tol = 1e-12 * l ** (2 * q)
        rows.append(LowerPolyRow(q, l, resolution, mn, (float(X[idx]), float(Y[idx])), tol,
                                 "certified" if mn >= -tol else "FAILED"))
    return rows


def zero_mean_gap(f: Field, q: int) -> float:
    """int int |f(x)-f(y)|^{2q} dy dx - 2 (2 pi)^n |f|_{2q}^{2q} for f with its mean removed.

    Double trapezoid sum over all grid pairs (O(N^2) memory-light loop).
    """
    g = f.grid
    v = (f.values - f.values.mean()).ravel()
    dv = g.cell_volume
    p = 2 * q
    total = 0.0
    block = max(1, 2**22 // v.size)
    for s in range(0, v.size, block):
        d = v[s:s + block, None] - v[None, :]
        total += float((d**p).sum())
    double = total * dv * dv
    vol = TWO_PI**g.ndims
    return double - 2 * vol * float((v**p).sum()) * dv
