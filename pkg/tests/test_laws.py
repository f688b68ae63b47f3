import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nchhs.laws import (GROWTH_K1, GROWTH_K2, GROWTH_K3K4, LawDomainError,
                        MaterialLaws, MaterialParams)


def laws(**kw):
    return MaterialLaws(MaterialParams(**kw))


def test_viscosity_values():
    L = laws(nu1=1.0, nu2=3.0)
    assert L.viscosity(0.0) == pytest.approx(2.0)
    assert L.viscosity(1.0) == pytest.approx(1.0)
    assert L.viscosity(-1.0) == pytest.approx(3.0)
    Le = laws(nu1=1.0, nu2=3.0, eps=0.1)
    assert Le.viscosity(0.95) == Le.viscosity(0.9)
    assert Le.viscosity(-7.0) == Le.viscosity(-0.9)
    with pytest.raises(LawDomainError):
        L.viscosity(1.01)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.sampled_from([0.0, 0.2, 0.1, 0.05]),
       st.floats(0.1, 10), st.floats(0.1, 10))
def test_viscosity_lower_bound(s, eps, nu1, nu2):
    L = laws(nu1=nu1, nu2=nu2, eps=eps)
    if eps == 0:
        s = float(np.clip(s, -1, 1))
    assert L.viscosity(s) >= min(nu1, nu2) * (1 - 1e-14)


def test_mobility_values():
    L = laws()
    assert L.mobility(0.0) == 1.0
    assert L.mobility(1.0) == 0.0 and L.mobility(-1.0) == 0.0
    Le = laws(eps=0.2)
    assert Le.mobility(0.9) == pytest.approx(0.36)
    s = np.linspace(-1, 1, 101)
    assert np.array_equal(L.mobility(s), L.mobility(-s))


def test_potential_at_zero():
    L = laws(theta=0.7)
    assert L.potential(0.0) == 0.0
    assert L.potential_d1(0.0) == 0.0
    assert L.potential_d2(0.0) == pytest.approx(0.7)
    assert L.potential(1.0) == pytest.approx(0.7 * np.log(2.0))
    with pytest.raises(LawDomainError):
        L.potential_d1(1.0)
    with pytest.raises(LawDomainError):
        L.entropy(-1.0)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_regularized_potential_matches_at_junction(eps):
    L0, L = laws(), laws(eps=eps)
    a = 1 - eps
    for s in (a, -a):
        for side in (s - 1e-13, s, s + 1e-13):
            assert L.potential(side) == pytest.approx(L0.potential(s), abs=1e-12)
            assert L.potential_d1(side) == pytest.approx(L0.potential_d1(s), abs=1e-11)
        assert L.potential_d2(s) == pytest.approx(L0.potential_d2(s), rel=1e-12)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05, 0.025])
def test_growth_bounds(eps):
    L = laws(eps=eps)
    s = np.linspace(-10, 10, 20001)
    assert np.all(L.potential(s) >= GROWTH_K1 * np.abs(s) ** 3 - GROWTH_K2 - 1e-12)
    k3, k4 = GROWTH_K3K4[eps]
    assert np.all(np.abs(L.potential_d1(s)) <= k3 * s * s + k4)


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05])
def test_convexity_constant(eps):
    L = laws(theta=1.3, eps=eps)
    s = np.linspace(-20, 20, 40001)
    assert np.all(L.potential_d2(s) >= L.constants.c0 * (1 - 1e-14))


@pytest.mark.parametrize("eps", [0.2, 0.1, 0.05, 0.01])
def test_regularized_potential_below_original_plus_eps_cubed(eps):
    L0, L = laws(), laws(eps=eps)
    s = np.linspace(-1 + 1e-12, 1 - 1e-12, 20001)
    assert np.all(L.potential(s) <= L0.potential(s) + eps ** 3 + 1e-14)


@pytest.mark.parametrize("eps", [0.0, 0.1])
def test_derivative_consistency(eps):
    L = laws(theta=1.0, eps=eps)
    s = np.linspace(-0.97, 0.97, 301) if eps == 0 else np.linspace(-3, 3, 301)
    s = s[np.abs(np.abs(s) - (1 - eps)) > 1e-3]
    h = 1e-5
    fd1 = (L.potential(s + h) - L.potential(s - h)) / (2 * h)
    fd2 = (L.potential_d1(s + h) - L.potential_d1(s - h)) / (2 * h)
    assert np.allclose(fd1, L.potential_d1(s), rtol=1e-7, atol=1e-9)
    assert np.allclose(fd2, L.potential_d2(s), rtol=1e-7, atol=1e-9)


def test_lambda_reference_is_theta():
    L = laws(theta=0.8)
    assert L.lam(0.5) == 0.8
    # finite-difference oracle: m(s) * d/ds F'(s)
    s, h = 0.5, 1e-6
    fd = (L.potential_d1(s + h) - L.potential_d1(s - h)) / (2 * h)
    assert L.mobility(s) * fd == pytest.approx(0.8, abs=1e-8)
    assert L.lam(1.0) == 0.8 and L.lam(-1.0) == 0.8
    grid = np.linspace(-1, 1, 10000)
    assert np.all(L.lam(grid) >= L.constants.alpha0)


@pytest.mark.parametrize("eps", [0.0, 0.1])
def test_b_primitive(eps):
    L = laws(theta=1.5, theta0=2.0, eps=eps)
    assert L.b_primitive(0.0) == 0.0
    if eps == 0:
        assert L.b_primitive(1.0) == 1.5
    s = np.sort(np.random.default_rng(0).uniform(-1, 1, 500))
    b = L.b_primitive(s)
    assert np.all(np.diff(b) > 0)
    for t in (0.95, -0.97, 0.3):
        assert L.b_primitive(t) == pytest.approx(integrate.quad(L.lam, 0, t, points=[0.9, -0.9])[0], rel=1e-10)


def test_entropy_closed_form():
    L = laws()
    assert L.entropy(0.0) == 0.0
    assert L.entropy_d1(0.0) == 0.0
    assert L.entropy(0.5) == pytest.approx(0.5 * np.arctanh(0.5) + 0.5 * np.log(0.75), rel=1e-14)
    s, h = np.linspace(-0.9, 0.9, 37), 1e-4
    d2 = (L.entropy(s + h) - 2 * L.entropy(s) + L.entropy(s - h)) / h ** 2
    assert np.allclose(L.mobility(s) * d2, 1.0, atol=1e-6)
    assert np.allclose(L.entropy(s), L.entropy(-s), rtol=0, atol=1e-15)
    assert np.all(d2 > 0)


@pytest.mark.parametrize("eps", [0.1, 0.05])
def test_regularized_entropy_by_double_quadrature(eps):
    L = laws(eps=eps)
    inv_m = lambda t: 1.0 / L.mobility(t)
    for s in (0.5, 0.97, -1.4, 2.0):
        brk = [x for x in (1 - eps, -1 + eps) if min(0, s) < x < max(0, s)]
        ref = integrate.quad(lambda t: (s - t) * inv_m(t), 0, s, points=brk or None, epsabs=1e-13)[0]
        assert L.entropy(s) == pytest.approx(ref, rel=1e-9)


def test_params_validation():
    with pytest.raises(ValueError, match="theta0 > theta"):
        MaterialParams(theta=1.0, theta0=0.5)
    with pytest.raises(ValueError, match="eps in"):
        MaterialParams(eps=1.5)


def test_safe_clamp_counts():
    L = laws()
    out = L.safe(np.array([0.0, 1.0, -1.0 + 1e-12]))
    assert L.clamp_count == 2
    assert np.all(np.isfinite(L.potential_d1(out)))


def test_custom_hook_matches_reference():
    th = 1.0
    ref = laws(theta=th)
    pot = (ref.potential, ref.potential_d1, ref.potential_d2)
    L = MaterialLaws(MaterialParams(theta=th, law_mode="custom-hook"),
                     mobility=lambda s: 1 - s * s, potential=pot)
    s = np.linspace(-0.99, 0.99, 41)
    assert np.allclose(L.b_primitive(s), ref.b_primitive(s), atol=1e-8)
    assert np.allclose(L.entropy(s), ref.entropy(s), atol=1e-6)
    assert L.constants.alpha0 == pytest.approx(th, rel=1e-6)
