import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from feas.quadrature import (
    dissipation_density_quadrature,
    dissipation_velocity_quadrature,
    gradient_gap_quadrature,
    kernel_alignment,
    kernel_quadrature_oracle,
)
from feas.spectral import Field, Grid, frac_laplacian, kernel_normalization, random_trig_field


def _rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


@pytest.mark.parametrize("alpha, tol", [(0.5, 3e-8), (1.0, 3e-7), (1.5, 3e-6)])
def test_matches_multiplier_1d(alpha, tol):
    g = Grid.of(256)
    f = random_trig_field(g, np.random.default_rng(3), 6)
    assert _rel(kernel_quadrature_oracle(f, alpha).values, frac_laplacian(f, alpha).values) < tol


@given(st.integers(0, 2**20), st.sampled_from([1.0, 1.5]))
def test_matches_multiplier_band_limited(seed, alpha):
    g = Grid.of(256)
    f = random_trig_field(g, np.random.default_rng(seed), 8)
    assert _rel(kernel_quadrature_oracle(f, alpha).values, frac_laplacian(f, alpha).values) < 1e-3


def test_matches_multiplier_2d():
    g = Grid.of(32, 32)
    f = random_trig_field(g, np.random.default_rng(1), 3)
    assert _rel(kernel_quadrature_oracle(f, 1.0).values, frac_laplacian(f, 1.0).values) < 1e-3


def test_rejects_alpha_two():
    with pytest.raises(ValueError):
        kernel_quadrature_oracle(Field.constant(Grid.of(16), 1.0), 2.0)


def test_alignment_of_constant_velocity_vanishes():
    g = Grid.of(64)
    rho = Field.from_function(g, lambda x: 1 + 0.4 * np.cos(x))
    out = kernel_alignment(Field.constant(g, 0.7), rho, 1.0)
    assert np.abs(out.values).max() < 1e-10


def test_velocity_dissipation_closed_form():
    # rho = 1, u = sin x: c int int (u-u')^2 phi = 2 int u Lambda u = 2 pi
    g = Grid.of(128)
    d = dissipation_velocity_quadrature(Field.constant(g, 1.0), Field.from_function(g, np.sin), 1.0)
    assert d == pytest.approx(2 * math.pi, rel=1e-7)


def test_density_dissipation_matches_spectral():
    g = Grid.of(128)
    rho = Field.from_function(g, lambda x: 1 + 0.5 * np.cos(x))
    spectral = (rho * rho * frac_laplacian(rho, 1.0)).integral()
    assert dissipation_density_quadrature(rho, 1.0) == pytest.approx(spectral, rel=1e-6)


def test_gradient_gap_identity():
    # int (g(x+z)-g(x))^2 phi dz = (2 g Lambda g - Lambda g^2) / c
    g = Grid.of(128)
    f = Field.from_function(g, lambda x: np.sin(x) + 0.3 * np.cos(2 * x))
    expect = (2 * f * frac_laplacian(f, 1.0) - frac_laplacian(f * f, 1.0)).values / kernel_normalization(1, 1.0)
    assert _rel(gradient_gap_quadrature(f, 1.0), expect) < 1e-6


def test_exp_sin_matches_multiplier():
    g = Grid.of(256)
    f = Field.from_function(g, lambda x: np.exp(np.sin(x)))
    assert _rel(kernel_quadrature_oracle(f, 1.5).values, frac_laplacian(f, 1.5).values) < 1e-4


def test_cos_and_linearity():
    g = Grid.of(128)
    c1 = Field.from_function(g, np.cos)
    assert _rel(kernel_quadrature_oracle(c1, 1.0).values, c1.values) < 1e-3
    a = Field.from_function(g, lambda x: np.cos(2 * x))
    b = Field.from_function(g, lambda x: np.cos(5 * x))
    combo = kernel_quadrature_oracle(a + 0.3 * b, 1.0).values
    assert _rel(combo, 2 * a.values + 0.3 * 5 * b.values) < 1e-3
    parts = kernel_quadrature_oracle(a, 1.0).values + 0.3 * kernel_quadrature_oracle(b, 1.0).values
    assert np.abs(combo - parts).max() < 1e-10
