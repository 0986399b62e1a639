import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from regenrates.errors import DegenerateCovariance
from regenrates.gaussian import (
    CovarianceMatrix2,
    gamma_density,
    phi_cdf,
    psi_kernel,
    psi_x_limit,
)

MATRICES = [
    CovarianceMatrix2(1.0, 0.0, 1.0),
    CovarianceMatrix2(4.0, 0.0, 1.0),
    CovarianceMatrix2(2.0, 0.9, 1.0),
]


def test_phi_cdf_symmetry_and_limits():
    assert phi_cdf(0.0) == 0.5
    assert abs(phi_cdf(40.0) - 1.0) <= 1e-15
    assert phi_cdf(-40.0) <= 1e-15


def test_phi_cdf_against_quadrature():
    density = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    q, _ = integrate.quad(density, -40.0, 1.959964, epsabs=1e-13)
    assert abs(phi_cdf(1.959964) - q) <= 1e-12
    assert abs(phi_cdf(1.959964) - 0.975) <= 1e-6


def test_gamma_density_values():
    ident = MATRICES[0]
    assert abs(gamma_density(ident, 0.0, 0.0) - 1.0 / (2 * math.pi)) <= 1e-15
    # independence factorization at (1, 2)
    phi = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    assert abs(gamma_density(ident, 1.0, 2.0) - phi(1.0) * phi(2.0)) <= 1e-15
    assert abs(gamma_density(MATRICES[1], 0.0, 0.0) - 1.0 / (4 * math.pi)) <= 1e-15


def test_psi_kernel_examples():
    ident = MATRICES[0]
    phi0 = 1.0 / math.sqrt(2 * math.pi)
    assert abs(psi_kernel(ident, 0.0, 0.0) - 0.5 * phi0) <= 1e-15
    assert abs(psi_kernel(ident, 40.0, 0.0) - phi0) <= 1e-15
    assert psi_kernel(ident, -40.0, 0.0) <= 1e-15
    assert abs(psi_x_limit(ident, 0.0) - phi0) <= 1e-16


@pytest.mark.parametrize("a", MATRICES)
def test_psi_closed_form_matches_quadrature(a):
    # full 21x21 sweep lives in the acceptance suite; spot-check a subgrid here
    for x in np.linspace(-5, 5, 7):
        for y in np.linspace(-5, 5, 7):
            q, _ = integrate.quad(
                lambda t: gamma_density(a, t, y), -40.0, x, epsabs=1e-13, limit=200
            )
            assert abs(q - psi_kernel(a, x, y)) <= 1e-9


@pytest.mark.parametrize("a", MATRICES)
@pytest.mark.parametrize("x", [-2.0, 0.0, 1.5])
def test_psi_marginal_identity(a, x):
    alpha = math.sqrt(a.s11)
    half_width = 12.0 * math.sqrt(a.s22)
    ys = np.linspace(-half_width, half_width, 8193)
    integral = np.trapezoid(psi_kernel(a, alpha * x, ys), ys)
    assert abs(integral - phi_cdf(x)) <= 1e-8


@settings(max_examples=200, deadline=None)
@given(
    x1=st.floats(-6, 6),
    x2=st.floats(-6, 6),
    y=st.floats(-6, 6),
)
def test_psi_monotone_in_x(x1, x2, y):
    a = MATRICES[2]
    lo, hi = min(x1, x2), max(x1, x2)
    assert psi_kernel(a, lo, y) <= psi_kernel(a, hi, y) + 1e-15


def test_degenerate_covariance_rejected():
    flat = CovarianceMatrix2(1.0, 0.0, 0.0)
    with pytest.raises(DegenerateCovariance):
        gamma_density(flat, 0.0, 0.0)
    with pytest.raises(DegenerateCovariance):
        psi_kernel(flat, 0.0, 0.0)
    with pytest.raises(ValueError):
        CovarianceMatrix2(1.0, 2.0, 1.0)  # det < 0


def test_vectorized_evaluation():
    a = MATRICES[2]
    xs = np.linspace(-3, 3, 11)
    vec = psi_kernel(a, xs, 0.7)
    scalars = np.array([psi_kernel(a, float(x), 0.7) for x in xs])
    assert np.allclose(vec, scalars, rtol=0, atol=1e-15)
