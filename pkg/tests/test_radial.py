"""Tests for the radial WKB pipeline (series and grid modes)."""

import os

import numpy as np
import pytest
from scipy.integrate import quad

from magwkb.radial import (
    ProfileError,
    RadialField,
    assemble_ansatz,
    default_cutoff,
    eikonal_phi,
    smooth_cutoff,
    transport_chain,
)
from magwkb.surface import SurfaceField, transport_cascade

SEED = int(os.environ.get("MAGWKB_SEED", "0"))

BETA_LINEAR = RadialField.from_poly([1.0, 1.0])  # beta(s) = 1 + s


# ---------------------------------------------------------------------------
# eikonal phase
# ---------------------------------------------------------------------------


def test_phi_constant_profile():
    # constant profile admits no positive slope; check the raw formula via a
    # nearly flat one and the exact linear-profile value instead
    phi = eikonal_phi(BETA_LINEAR)
    rho = np.linspace(0.0, 3.0, 31)
    assert np.max(np.abs(phi(rho) - (rho / 2 + rho**2 / 8))) < 1e-14


def test_phi_linear_profile_closed_form():
    phi = eikonal_phi(BETA_LINEAR)
    assert abs(phi(2.0) - (1.0 + 0.5)) < 1e-14
    assert abs(phi.derivative(0.0) - 0.5) < 1e-14  # beta(0)/2


def test_phi_eikonal_identity_random_quartic():
    rng = np.random.default_rng(SEED)
    coeffs = [1.0 + rng.random(), rng.random() + 0.5, rng.random(), rng.random(), rng.random()]
    field = RadialField.from_poly(coeffs)
    phi = eikonal_phi(field, order=32)
    rho = rng.uniform(0.01, 2.0, size=100)
    a_quad = np.array(
        [quad(field.beta_at, 0.0, r, epsabs=1e-14, epsrel=1e-13)[0] for r in rho]
    )
    resid = phi.derivative(rho) ** 2 - a_quad**2 / (4.0 * rho**2)
    assert np.max(np.abs(resid)) < 1e-10
    # phi itself is the antiderivative of a/(2 rho)
    phi_quad = np.array(
        [quad(lambda t: field.a_over_2rho_at(t), 0.0, r, epsabs=1e-14)[0] for r in rho[:10]]
    )
    assert np.max(np.abs(phi(rho[:10]) - phi_quad)) < 1e-10


def test_phi_monotone():
    phi = eikonal_phi(BETA_LINEAR)
    rho = np.linspace(0, 3, 200)
    assert np.all(np.diff(phi(rho)) > 0)


# ---------------------------------------------------------------------------
# transport chain
# ---------------------------------------------------------------------------


def test_constant_profile_is_exact_landau():
    # the exactly flat profile short-circuits to the pure Landau data
    field = RadialField.from_poly([2.0])
    exp = transport_chain(field, 3, J=3, mode="series")
    assert exp.mu[0] == 2.0
    assert all(abs(v) <= 1e-12 for v in exp.mu[1:])
    rho = np.linspace(0, 2, 21)
    assert np.max(np.abs(exp.amplitude(0, rho) - 1.0)) < 1e-14
    for j in range(1, 4):
        assert np.max(np.abs(exp.amplitude(j, rho))) < 1e-14
    # a slope-free profile that is not constant is still rejected
    with pytest.raises(ProfileError):
        RadialField.from_poly([1.0, 0.0, 1.0])


def test_linear_profile_closed_forms():
    for m in [0, 1, 3]:
        exp = transport_chain(BETA_LINEAR, m, J=1, mode="series")
        assert abs(exp.mu[0] - 1.0) < 1e-14
        assert abs(exp.mu[1] - (m + 1)) < 1e-12
    exp = transport_chain(BETA_LINEAR, 0, J=0, mode="grid", rho_max=5.0)
    rho = np.linspace(0.0, 4.0, 101)
    assert np.max(np.abs(exp.amplitude(0, rho) - 2.0 / (2.0 + rho))) < 1e-9
    # slope of the leading amplitude at 0 is -beta'(0) / (2 beta(0))
    exps = transport_chain(BETA_LINEAR, 2, J=0, mode="series")
    assert abs(exps.amp_series[0].coeff(1).real + 0.5) < 1e-13


def test_mu1_paper_value():
    field = RadialField.from_poly([2.0, 3.0])
    exp = transport_chain(field, 4, J=0, mode="series")
    assert abs(exp.mu[1] - 15.0 / 2.0) < 1e-13


def test_mode_agreement():
    field = RadialField.from_poly([1.0, 1.0])
    grid = transport_chain(field, 1, J=3, mode="grid", rho_max=5.0, n_cheb=192)
    series = transport_chain(field, 1, J=3, mode="series", order=48)
    assert np.max(np.abs(np.array(grid.mu) - np.array(series.mu))) < 1e-8
    rho = np.linspace(0.0, 0.6, 13)
    for j in range(4):
        assert np.max(np.abs(grid.amplitude(j, rho) - series.amplitude(j, rho))) < 1e-8


def test_mode_agreement_callable_profile():
    fn = RadialField.from_function(
        lambda r: 1.0 + r, lambda r: np.ones_like(np.asarray(r, dtype=float))
    )
    grid = transport_chain(fn, 0, J=2, mode="grid", rho_max=5.0, n_cheb=160)
    series = transport_chain(BETA_LINEAR, 0, J=2, mode="series", order=48)
    assert np.max(np.abs(np.array(grid.mu) - np.array(series.mu))) < 1e-8


def test_leading_amplitude_positive():
    rng = np.random.default_rng(SEED + 1)
    for _ in range(5):
        field = RadialField.from_poly([1.0 + rng.random(), 0.5 + rng.random(), rng.random()])
        exp = transport_chain(field, 0, J=0, mode="grid", rho_max=4.0)
        rho = np.linspace(0, 4, 200)
        assert np.all(exp.amplitude(0, rho) > 0)


def test_higher_amplitudes_vanish_at_zero():
    exp = transport_chain(BETA_LINEAR, 2, J=3, mode="series")
    for j in range(1, 4):
        assert abs(exp.amplitude(j, 0.0)) < 1e-12
    assert abs(exp.amplitude(0, 0.0) - 1.0) < 1e-14


def test_mu1_degenerates_linearly_with_slope():
    for eps in [1e-1, 1e-2, 1e-3]:
        field = RadialField.from_poly([1.0, eps, 1.0])
        exp = transport_chain(field, 2, J=0, mode="series")
        assert abs(exp.mu[1] - 3.0 * eps) < 1e-12 * max(1.0, eps)


def test_truncation_budget_error():
    field = RadialField.from_poly([1.0, 1.0, 0.5], exact=False)
    with pytest.raises(ProfileError):
        transport_chain(field, 0, J=3, mode="series")


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------


def test_cutoff_plateaus():
    K = 2.0
    rho = np.array([0.0, 1.0, K, K + 1.0, K + 1.5, 10.0])
    chi = smooth_cutoff(rho, K)
    assert np.allclose(chi[:3], 1.0)
    assert np.allclose(chi[3:], 0.0)
    mid = smooth_cutoff(np.linspace(K, K + 1, 50), K)
    assert np.all(np.diff(mid) <= 1e-12)


def test_cutoff_smooth_at_joints():
    # all derivatives of the glue vanish at the joints; finite-difference
    # estimates of orders 1..4 taken just inside the transition must be tiny
    K = 2.0
    h = 5e-3
    for joint in (K, K + 1.0):
        x = joint + np.arange(-4, 5) * h
        vals = smooth_cutoff(x, K)
        d = vals.copy()
        for order in range(1, 5):
            d = np.diff(d) / h
            mid = d[len(d) // 2]
            assert abs(mid) < 1e-6, (joint, order, mid)


def test_default_cutoff_doubling_rule():
    assert abs(default_cutoff(BETA_LINEAR, 5.0) - 2.0) < 1e-2


# ---------------------------------------------------------------------------
# ansatz assembly
# ---------------------------------------------------------------------------


def test_ansatz_constant_limit_is_gaussian():
    # nearly flat profile: leading ansatz is chi * e^{-b0 rho / (2h)}
    field = RadialField.from_poly([1.0, 1e-9])
    exp = transport_chain(field, 0, J=0, mode="series", cutoff_K=2.0)
    h = 1 / 8
    rho = np.linspace(0, 1.5, 20)
    psi = exp.ansatz_fiber(rho, h)
    assert np.max(np.abs(psi - np.exp(-rho / (2 * h)))) < 1e-6


def test_ansatz_angular_vanishing():
    exp = transport_chain(BETA_LINEAR, 2, J=0, mode="series", cutoff_K=2.0)
    psi = exp.ansatz_fiber(np.array([0.0, 1e-6]), h=0.1)
    assert psi[0] == 0.0
    assert abs(psi[1]) < 1e-5


def test_ansatz_rejects_bad_h():
    exp = transport_chain(BETA_LINEAR, 0, J=0, mode="series")
    with pytest.raises(ValueError):
        exp.ansatz_fiber(np.linspace(0, 1, 5), h=-0.25)
    with pytest.raises(ValueError):
        assemble_ansatz(exp, h=0.0, mode="fiber", rho=np.linspace(0, 1, 5))


def test_ansatz_norm_against_adaptive_quadrature():
    exp = transport_chain(BETA_LINEAR, 0, J=1, mode="grid", rho_max=5.0, cutoff_K=2.0)
    h = 1.0 / 16.0
    norm2_quad = quad(
        lambda r: float(exp.ansatz_fiber(np.array([r]), h)[0]) ** 2,
        0.0,
        3.0,
        epsabs=1e-14,
        epsrel=1e-12,
        limit=200,
    )[0]
    nodes, weights = np.polynomial.legendre.leggauss(2000)
    r = 1.5 * (nodes + 1.0)
    vals = exp.ansatz_fiber(r, h) ** 2
    norm2_gauss = 1.5 * np.dot(weights, vals)
    assert abs(norm2_gauss - norm2_quad) < 1e-8 * norm2_quad


def test_ansatz_plane_matches_fiber():
    exp = transport_chain(BETA_LINEAR, 1, J=0, mode="grid", rho_max=5.0, cutoff_K=2.0)
    x = np.array([0.3, 0.6])
    y = np.array([0.0, 0.2])
    plane = exp.ansatz_plane(x, y, h=0.1)
    xg, yg = np.meshgrid(x, y, indexing="ij")
    rho = 0.5 * (xg**2 + yg**2)
    fiber = exp.ansatz_fiber(rho.ravel(), h=0.1).reshape(rho.shape)
    theta = np.arctan2(yg, xg)
    assert np.max(np.abs(plane - fiber * np.exp(1j * theta))) < 1e-12


# ---------------------------------------------------------------------------
# cross-check against the general-surface cascade
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("beta_coeffs", [[1.0, 1.0], [2.0, 3.0, 0.5]])
def test_cross_oracle_with_surface_cascade(beta_coeffs):
    radial_field = RadialField.from_poly(beta_coeffs)
    surface_field = SurfaceField.from_radial_poly(beta_coeffs, order=12)
    for level in [0, 1, 2]:
        surf = transport_cascade(surface_field, level, J=1)
        rad = transport_chain(radial_field, level, J=1, mode="series")
        for j in range(3):
            assert abs(surf.mu[j] - rad.mu[j]) < 1e-8, (level, j)
