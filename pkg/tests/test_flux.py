import numpy as np
import pytest

from lsnn_hcl.flux import BUILTIN_FLUX_NAMES, builtin_flux, custom_flux, total_flux


def test_builtin_values():
    burgers = builtin_flux("burgers1d")
    assert burgers.f[0](np.float64(2.0)) == pytest.approx(2.0)
    assert burgers.f_prime[0](np.float64(2.0)) == pytest.approx(2.0)
    quartic = builtin_flux("quartic1d")
    assert quartic.f[0](np.float64(1.0)) == pytest.approx(0.25)
    assert quartic.f_prime[0](np.float64(1.0)) == pytest.approx(1.0)
    cubic = builtin_flux("cubic1d")
    # f'(-1/2) = 1/4 is the tangency value behind the compound wave
    assert cubic.f_prime[0](np.float64(-0.5)) == pytest.approx(0.25)


def test_unknown_name():
    with pytest.raises(ValueError, match="unknown flux"):
        builtin_flux("septic1d")


def test_total_flux_examples():
    burgers = builtin_flux("burgers1d")
    assert np.allclose(total_flux(burgers, 0.0), [0.0, 0.0])
    assert np.allclose(total_flux(burgers, 1.0), [0.5, 1.0])
    b2 = builtin_flux("burgers2d")
    assert np.allclose(total_flux(b2, -1.0), [0.5, 0.5, -1.0])


def test_total_flux_last_component_is_identity():
    rng = np.random.default_rng(7)
    u = rng.uniform(-3, 3, size=50)
    for name in BUILTIN_FLUX_NAMES:
        model = builtin_flux(name)
        out = total_flux(model, u)
        assert np.array_equal(out[:, -1], u)


def test_derivatives_match_central_differences():
    rng = np.random.default_rng(11)
    u = rng.uniform(-2, 2, size=100)
    eps = 1e-6
    for name in BUILTIN_FLUX_NAMES:
        model = builtin_flux(name)
        for f, fp in zip(model.f, model.f_prime):
            fd = (f(u + eps) - f(u - eps)) / (2 * eps)
            assert np.max(np.abs(fp(u) - fd)) <= 1e-6


def test_convex_fluxes_have_nonnegative_second_derivative():
    u = np.linspace(-2, 2, 101)
    for name in ("burgers1d", "quartic1d"):
        model = builtin_flux(name)
        assert np.all(model.f_double_prime[0](u) >= 0)


def test_custom_flux_hook():
    model = custom_flux(lambda u: u**2, lambda u: 2 * u, name="square")
    assert model.f[0](np.float64(3.0)) == pytest.approx(9.0)
    assert model.f_double_prime is None
    assert np.allclose(total_flux(model, 2.0), [4.0, 2.0])
