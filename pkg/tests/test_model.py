import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feas.model import (
    AccuracyWarning,
    DensityModes,
    NullEntropy,
    SolvabilityError,
    State,
    TrigPolynomial,
    VacuumError,
    alignment_term,
    check_compatibility,
    entropy_field,
    entropy_of,
    make_initial_data,
    null_entropy_velocity,
    project_to_solvable,
    rhs,
)
from feas.quadrature import kernel_quadrature_oracle
from feas.spectral import Field, Grid, random_trig_field


def _band_state(seed, n=64, kmax=10):
    g = Grid.of(n)
    rng = np.random.default_rng(seed)
    rho = 1.0 + 0.5 * random_trig_field(g, rng, kmax)
    return State(rho, random_trig_field(g, rng, kmax))


def test_rhs_closed_form():
    # rho = 1, u = sin: rho_t = -cos, u_t = -sin cos - sin (Lambda^1 sin = sin)
    g = Grid.of(64)
    x = g.coords()[0]
    drho, du = rhs(State(Field.constant(g, 1.0), Field(g, np.sin(x))), 1.0)
    assert np.abs(drho.values + np.cos(x)).max() < 1e-13
    assert np.abs(du.values + np.sin(x) * np.cos(x) + np.sin(x)).max() < 1e-13


def test_rhs_without_alignment_is_burgers():
    g = Grid.of(64)
    x = g.coords()[0]
    _, du = rhs(State(Field.constant(g, 1.0), Field(g, np.sin(x))), 1.0, alignment=False)
    assert np.abs(du.values + np.sin(x) * np.cos(x)).max() < 1e-13


@given(st.integers(0, 2**20), st.floats(0.3, 2.0))
def test_rhs_conserves_mass_and_momentum(seed, alpha):
    s = _band_state(seed)
    drho, du = rhs(s, alpha)
    assert abs(drho.integral()) < 1e-12
    assert abs((s.rho * du + s.u * drho).integral()) < 1e-11


def test_rhs_rejects_vacuum():
    g = Grid.of(16)
    x = g.coords()[0]
    with pytest.raises(VacuumError):
        rhs(State(Field(g, 1 + np.cos(x)), Field.constant(g, 0.0)), 1.0)


def test_alignment_vanishes_for_constant_velocity():
    g = Grid.of(32, 32)
    rho = 1.0 + 0.3 * random_trig_field(g, np.random.default_rng(0), 4)
    assert np.abs(alignment_term(Field.constant(g, 2.0), rho, 0.8).values).max() < 1e-12


def test_alignment_paths_agree():
    g = Grid.of(256)
    rng = np.random.default_rng(7)
    rho = 1.0 + 0.4 * random_trig_field(g, rng, 6)
    u = random_trig_field(g, rng, 6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        k = alignment_term(u, rho, 1.0, path="kernel").values
    sp = alignment_term(u, rho, 1.0, dealias=False).values
    assert np.abs(k - sp).max() / np.abs(sp).max() < 1e-6


def test_kernel_path_warns_when_under_resolved():
    g = Grid.of(32)
    rho = Field.constant(g, 1.0)
    u = Field.from_function(g, lambda x: np.sin(10 * x))
    with pytest.warns(AccuracyWarning):
        alignment_term(u, rho, 1.0, path="kernel")


def test_unknown_path():
    g = Grid.of(8)
    with pytest.raises(ValueError):
        alignment_term(Field.constant(g, 0.0), Field.constant(g, 1.0), 1.0, path="fmm")


class TestEntropy:
    def test_null_entropy_1d(self):
        g = Grid.of(128)
        rho = DensityModes(1.0, (((1,), 0.3, 0.1), ((3,), 0.0, 0.05))).field(g)
        u = null_entropy_velocity(rho, 0.4, 1.0)
        assert np.abs(entropy_field(rho, u, 1.0).values).max() < 1e-13
        assert (rho * u).integral() / rho.integral() == pytest.approx(0.4, rel=1e-13)

    def test_null_entropy_2d(self):
        g = Grid.of(32, 32)
        rho = DensityModes(1.0, (((1, 1), 0.2, 0.0), ((2, -1), 0.0, 0.1))).field(g)
        u = null_entropy_velocity(rho, 0.0, 1.5)
        assert np.abs(entropy_field(rho, u, 1.5).values).max() < 1e-13

    def test_solvability_error_lists_modes(self):
        g = Grid.of(16, 16)
        rho = DensityModes(1.0, (((0, 1), 0.2, 0.0),)).field(g)
        with pytest.raises(SolvabilityError) as exc:
            null_entropy_velocity(rho, 0.0, 1.0)
        assert set(exc.value.modes) == {(0, 1), (0, -1)}

    def test_projection_makes_solvable(self):
        g = Grid.of(16, 16)
        rho = DensityModes(1.0, (((0, 1), 0.2, 0.0), ((1, 0), 0.1, 0.0))).field(g)
        fixed = project_to_solvable(rho)
        u = null_entropy_velocity(fixed, 0.0, 1.0)
        assert np.abs(entropy_field(fixed, u, 1.0).values).max() < 1e-13

    def test_entropy_amplitude(self):
        g = Grid.of(64)
        s = make_initial_data(NullEntropy(DensityModes(1.0, (((1,), 0.3, 0.0),)), 0.2, 0.05), g, 1.0)
        e = entropy_of(s, 1.0).e
        assert np.abs(e.values - 0.05 * np.cos(g.coords()[0])).max() < 1e-13
        assert s.ubar == pytest.approx(0.2, rel=1e-13)

    def test_compatibility(self):
        g = Grid.of(64)
        s = make_initial_data(TrigPolynomial(seed=2), g, 1.0)
        e = entropy_field(s.rho, s.u, 1.0)
        assert check_compatibility(s.rho, s.u, e, 1.0) < 1e-12
        # the constant test function sees int 0.1 = 0.2 pi
        assert check_compatibility(s.rho, s.u, e + 0.1, 1.0) == pytest.approx(0.2 * math.pi, rel=1e-12)


class TestInitialData:
    @given(st.integers(0, 10_000), st.floats(0.1, 2.0), st.floats(-1, 1))
    def test_trig_floor_and_mean_velocity(self, seed, floor, ubar):
        s = make_initial_data(TrigPolynomial(seed=seed, rho_floor=floor, ubar=ubar), Grid.of(64))
        assert s.rho.min() >= floor - 1e-12
        assert s.ubar == pytest.approx(ubar, abs=1e-12)

    def test_reproducible(self):
        g = Grid.of(32)
        a = make_initial_data(TrigPolynomial(seed=5), g)
        b = make_initial_data(TrigPolynomial(seed=5), g)
        assert np.array_equal(a.rho.values, b.rho.values)

    def test_x1_modes_only_is_solvable(self):
        g = Grid.of(32, 32)
        s = make_initial_data(TrigPolynomial(seed=1, x1_modes_only=True), g)
        null_entropy_velocity(s.rho, 0.0, 1.0)

    def test_vacuum_rejected(self):
        with pytest.raises(VacuumError):
            make_initial_data(DensityModes(0.5, (((1,), 0.6, 0.0),)), Grid.of(32))

    def test_grid_required(self):
        with pytest.raises(ValueError):
            make_initial_data(TrigPolynomial())

    def test_state_grid_mismatch(self):
        with pytest.raises(ValueError):
            State(Field.constant(Grid.of(8), 1.0), Field.constant(Grid.of(16), 0.0))


def test_entropy_against_finite_differences():
    s = make_initial_data(TrigPolynomial(seed=11, n_modes=4), Grid.of(256))
    h = s.grid.spacing[0]
    u = s.u.values
    du = (8 * (np.roll(u, -1) - np.roll(u, 1)) - (np.roll(u, -2) - np.roll(u, 2))) / (12 * h)
    ref = du - kernel_quadrature_oracle(s.rho, 1.0).values
    e = entropy_of(s, 1.0).e.values
    assert np.abs(e - ref).max() <= 1e-3 * np.abs(ref).max()


def test_null_entropy_2d_coefficients():
    g = Grid.of(16, 16)
    rho = Field.from_function(g, lambda x, y: 1 + 0.2 * np.cos(x) * np.cos(y))
    alpha = 1.0
    u = null_entropy_velocity(rho, 0.0, alpha)
    rh, uh = rho.spectral, u.spectral
    for k1, k2 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        expect = math.sqrt(2) ** alpha * rh[k1, k2] / (1j * k1)
        assert abs(uh[k1, k2] - expect) < 1e-15
    assert np.abs(entropy_of(State(rho, u), alpha).e.values).max() <= 1e-10


def test_trig_seed_seven():
    g = Grid.of(64)
    r = TrigPolynomial(seed=7, n_modes=4, rho_floor=0.5, amplitude=0.3)
    a, b = make_initial_data(r, g), make_initial_data(r, g)
    assert a.rho.values.tobytes() == b.rho.values.tobytes()
    assert a.rho.min() >= 0.5
