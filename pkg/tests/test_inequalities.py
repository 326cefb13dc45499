import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from feas.inequalities import (
    BoxSweep,
    CertificationError,
    certified_C,
    certify_fq_min,
    certify_lowerpoly,
    f_q_value,
    remainder_Rq,
    zero_mean_gap,
)
from feas.spectral import Field, Grid, random_trig_field

# min of f_q on [-1/2, 1]^2 (rho- = 1/2, rho+ = 2, m = 1) from a 40-digit evaluation of the
# difference-quotient form with a multistart Nelder-Mead search
FQ_MIN = {
    2: 0.21499464136659366,
    3: 0.053990018074167714,
    4: 0.013513858123550883,
    5: 0.0033801613162295157,
    6: 0.0008452576452089816,
}


def _fq_direct(X, Y, q, m):
    X, Y = mp.mpf(X), mp.mpf(Y)
    d = X - Y
    a = mp.mpf(2 * q - 1) / (2 * q)
    return float(a * (X ** (2 * q) - Y ** (2 * q)) / d ** (2 * q - 1)
                 + m * (X ** (2 * q - 1) - Y ** (2 * q - 1)) / d ** (2 * q - 1))


coord = st.floats(-3, 3, allow_nan=False)


@given(coord, coord, st.integers(1, 6), st.floats(0.1, 3))
def test_fq_matches_quotient_form(X, Y, q, m):
    assume(abs(X - Y) > 1e-3)
    mp.mp.dps = 50
    assert f_q_value(X, Y, q, m) == pytest.approx(_fq_direct(X, Y, q, m), rel=1e-9, abs=1e-12)


def test_fq_diagonal():
    assert f_q_value(0.3, 0.3, 1, 1.0) == pytest.approx(1.3)
    assert f_q_value(0.3, 0.3, 2, 1.0) == math.inf
    assert f_q_value(0.0, 0.0, 2, 1.0) == pytest.approx(0.25, rel=1e-6)


def test_c1_corner():
    c = certify_fq_min(BoxSweep(1, 1.0, 0.5, 2.0))
    assert c.min_value == 0.5 and c.C_q == 1.0
    assert c.argmin == (-0.5, -0.5)


@pytest.mark.parametrize("q", sorted(FQ_MIN))
def test_frozen_minima(q):
    c = certify_fq_min(BoxSweep(q, 1.0, 0.5, 2.0, resolution=2001))
    assert c.status == "certified"
    assert c.min_value == pytest.approx(FQ_MIN[q], rel=1e-10)


def test_c2_lower_bound():
    lo, hi = 0.5, 2.0
    assert certified_C(2, lo, hi, 1.0) * lo >= 0.25 * (lo / hi) * lo


def test_failed_certificate():
    # a box reaching far below -m makes f_1 = (X+Y)/2 + m negative
    sweep = BoxSweep(1, 1.0, 0.5, 2.0, bounds=(-3.0, 1.0))
    with pytest.raises(CertificationError):
        certify_fq_min(sweep)
    assert certify_fq_min(sweep, strict=False).status == "FAILED"


@pytest.mark.parametrize("kw", [dict(q=0), dict(resolution=50), dict(rho_minus=1.5)])
def test_sweep_validation(kw):
    args = dict(q=1, m=1.0, rho_minus=0.5, rho_plus=2.0)
    args.update(kw)
    with pytest.raises(ValueError):
        BoxSweep(**args)


@given(coord, st.integers(1, 8))
def test_remainder_on_diagonal(X, q):
    expect = 0.0 if q == 1 else (4 * q - 2) * X ** (2 * q)
    assert remainder_Rq(X, X, q) == pytest.approx(expect, rel=1e-12, abs=1e-300)


@given(coord, coord, st.integers(1, 6))
def test_remainder_definition(X, Y, q):
    mp.mp.dps = 50
    x, y = mp.mpf(X), mp.mpf(Y)
    P = 2 * x * y if q == 1 else 2 * q * (x ** (2 * q - 1) * y + x * y ** (2 * q - 1))
    exact = float((x - y) ** (2 * q) - x ** (2 * q) - y ** (2 * q) + P)
    scale = max(abs(X), abs(Y), 1.0) ** (2 * q)
    assert remainder_Rq(X, Y, q) == pytest.approx(exact, abs=1e-12 * scale)


@pytest.mark.parametrize("l", [1.0, 2.0])
def test_lowerpoly(l):
    rows = certify_lowerpoly(6, l, resolution=2001)
    assert [r.q for r in rows] == list(range(1, 7))
    assert all(r.status == "certified" and r.min_value >= -1e-12 for r in rows)


@given(st.integers(0, 2**20), st.integers(1, 2))
def test_zero_mean_gap_nonnegative(seed, q):
    f = random_trig_field(Grid.of(64), np.random.default_rng(seed), 6)
    assert zero_mean_gap(f, q) >= -1e-10


def test_zero_mean_gap_cos():
    # int int (cos x - cos y)^2 = 2 (2 pi) int cos^2 exactly
    f = Field.from_function(Grid.of(32), np.cos)
    assert abs(zero_mean_gap(f, 1)) < 1e-10


def test_origin_limit_along_antidiagonal():
    assert f_q_value(0.0, 0.0, 1, 0.7) == pytest.approx(0.7)
    for q in (2, 3):
        near = f_q_value(5e-7, -5e-7, q, 1.0)
        assert f_q_value(0.0, 0.0, q, 1.0) == pytest.approx(near, rel=1e-5)


@pytest.mark.parametrize("a", [0.1, 0.3, 0.5])
def test_q2_antidiagonal_bound(a):
    lo, hi = 0.5, 2.0
    assert f_q_value(a, -a, 2, 1.0) >= 0.25 * (lo / hi) * lo


def test_minima_decrease_in_q():
    mins = [certify_fq_min(BoxSweep(q, 1.0, 0.5, 2.0, 401)).min_value for q in range(3, 7)]
    assert all(m > 0 for m in mins) and all(b < a for a, b in zip(mins, mins[1:]))


@pytest.mark.parametrize("l", [0.5, 1.0, 2.0])
def test_q3_zero_pattern(l):
    row = certify_lowerpoly(3, l, 2001)[2]
    assert row.min_value == 0.0
    for p in ((0, 0), (l, 0), (-l, 0), (0, l), (0, -l)):
        assert remainder_Rq(*p, 3) == 0.0
    assert remainder_Rq(0.5, 0.5, 2) == pytest.approx(6 * 0.5**4)
