import math

import numpy as np
import pytest
from scipy.integrate import quad as squad
from scipy.optimize import brentq
from scipy.special import gamma as G

from chainlevy import levy_calculus as lc
from chainlevy.errors import DegenerateInputError


def _root_oracle(sign, B, gamma, r):
    f = lambda x: (2 * math.sqrt(x * x + B * B / 4) + sign * B) * x - math.pi / (gamma * r)
    return brentq(f, 1e-12, 1e6, xtol=1e-15, rtol=1e-15)


def test_regimes():
    assert lc.regime_of(0.75) == lc.GT_HALF
    assert lc.regime_of(0.5) == lc.EQ_HALF
    assert lc.regime_of(0.25) == lc.LT_HALF
    assert lc.alpha_of(0.75) == 1.5
    assert lc.alpha_of(0.25) == pytest.approx((5 - 0.25) / 3)


def test_root_zero_field():
    for br in lc.BRANCHES:
        x, _ = lc.solve_x(br, 0.0, 1.0, 1.0)
        assert x == pytest.approx(math.sqrt(math.pi / 2), rel=1e-13)


def test_root_unit_field_against_bracketing_oracle():
    xp, _ = lc.solve_x(lc.PLUS, 1.0, 1.0, 1.0)
    xm, _ = lc.solve_x(lc.MINUS, 1.0, 1.0, 1.0)
    assert xp == pytest.approx(_root_oracle(1, 1.0, 1.0, 1.0), rel=1e-13)
    assert xm == pytest.approx(_root_oracle(-1, 1.0, 1.0, 1.0), rel=1e-13)
    assert round(xp, 5) == 0.98106
    assert round(xm, 4) == 1.4795


def test_root_odd_in_r_and_derivative():
    x, xp = lc.solve_x(lc.MINUS, 2.0, 0.5, 0.7)
    xn, xpn = lc.solve_x(lc.MINUS, 2.0, 0.5, -0.7)
    assert xn == -x and xpn == xp
    h = 1e-6
    fd = (lc.solve_x(lc.MINUS, 2.0, 0.5, 0.7 + h)[0] - lc.solve_x(lc.MINUS, 2.0, 0.5, 0.7 - h)[0]) / (2 * h)
    assert xp == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("B", [0.0, 1e-4, 1.0, 1e4])
@pytest.mark.parametrize("br", [lc.PLUS, lc.MINUS])
def test_root_residual_lattice(B, br):
    r = np.logspace(-6, 6, 61)
    x, _ = lc.solve_x(br, B, 1.0, r)
    assert np.max(lc.root_residual(br, B, 1.0, r, x)) <= 1e-12


def test_root_rejects_zero():
    with pytest.raises(DegenerateInputError):
        lc.solve_x(lc.PLUS, 1.0, 1.0, 0.0)


@pytest.mark.parametrize("r", [0.1, 1.0, 10.0])
def test_density_limits(r):
    for br in lc.BRANCHES:
        assert lc.density_g(br, 1e-4, 1.0, r) == pytest.approx(lc.g_zero(1.0, r), rel=0.01)
    B = 1e4
    assert B ** (1 / 3) * lc.density_g(lc.MINUS, B, 1.0, r) == pytest.approx(lc.g_infinity(1.0, r), rel=0.01)
    assert B ** (1 / 3) * lc.density_g(lc.PLUS, B, 1.0, r) <= 0.01 * lc.g_infinity(1.0, r)


def test_density_even_and_positive():
    r = np.array([0.3, 2.0])
    for br in lc.BRANCHES:
        g = lc.density_g(br, 1.0, 1.0, r)
        assert np.all(g > 0)
        np.testing.assert_array_equal(lc.density_g(br, 1.0, 1.0, -r), g)


def test_primitive_h_matches_closed_form_and_density():
    for br in lc.BRANCHES:
        for r in (0.2, 1.0, 5.0):
            q = lc.primitive_h(br, 1.0, 1.0, r)
            assert q == pytest.approx(lc.primitive_h_closed(br, 1.0, 1.0, r), rel=1e-9)
            eps = 1e-5
            fd = (lc.primitive_h(br, 1.0, 1.0, r) - lc.primitive_h(br, 1.0, 1.0, r + eps)) / eps
            assert fd == pytest.approx(lc.density_g(br, 1.0, 1.0, r + eps / 2), rel=1e-5)
    assert lc.primitive_h(lc.PLUS, 1.0, 1.0, 1e8) < 1e-12


def test_constants():
    assert lc.KAPPA_0 == pytest.approx(1 / (32 * math.pi), rel=1e-15)
    assert lc.KAPPA_1 == pytest.approx(math.sqrt(math.pi) / (3 * 2 ** 3.5), rel=1e-15)
    assert lc.KAPPA_INF == pytest.approx((1 / (2 ** 13 * 27 * math.pi ** 3)) ** (1 / 3), rel=1e-15)
    assert round(lc.KAPPA_INF, 6) == 0.005263


@pytest.mark.parametrize("alpha", [1.5, 5 / 3, 0.7])
def test_stable_integral(alpha):
    val, err = lc.stable_integral(alpha)
    assert val == pytest.approx(lc.stable_integral_exact(alpha), rel=1e-11)
    assert err <= 1e-10
    if alpha == 1.5:
        assert val == pytest.approx(2 / 3 * math.sqrt(2 * math.pi), rel=1e-11)


def test_limit_constants_golden():
    c = lc.limit_constants(1.0, "paper")
    assert c.D_0 == pytest.approx(2 * lc.KAPPA_0 * 2 / 3 * math.sqrt(2 * math.pi), abs=1e-10)
    assert c.D_0 == pytest.approx(0.0332452, rel=1e-5)
    assert c.D_inf == pytest.approx(0.021980190098516556, rel=1e-10)


@pytest.mark.parametrize("regime", lc.REGIMES)
def test_small_jump_integrability(regime):
    val, err = lc.levy_measure(regime, 1.0, 1.0).small_jump_integral()
    assert np.isfinite(val) and val > 0
    assert err <= 1e-8


def test_measure_density_matches_scipy_quad_for_half():
    spec = lc.levy_measure(lc.EQ_HALF, 1.0, 1.0, "paper")
    r = 0.8
    # 2 gamma times the average over tau ~ Exp(1) of tau^{-1} G(2 pi r / tau)
    direct, _ = squad(lambda t: 2 * math.exp(-t) / t * lc.density_G(1.0, 1.0, 2 * math.pi * r / t),
                      0, np.inf, epsabs=0, epsrel=1e-11, limit=400)
    assert spec.density(r) == pytest.approx(direct, rel=1e-8)


@pytest.mark.parametrize("regime", [lc.GT_HALF, lc.LT_HALF])
@pytest.mark.parametrize("norm", lc.NORMALIZATIONS)
def test_exponent_closed_form_vs_quadrature(regime, norm):
    ex = lc.levy_exponent(lc.levy_measure(regime, 1.0, 1.0, norm))
    for th in (0.01, 1.0, 100.0):
        assert ex.quadrature(th) == pytest.approx(ex.evaluate(th), rel=1e-8)


def test_exponent_shape_and_published_constant():
    ex = lc.levy_exponent(lc.levy_measure(lc.GT_HALF, 1.0, 1.0, "paper"))
    assert ex.evaluate(2.0) / ex.evaluate(1.0) == pytest.approx(2 ** 1.5, rel=1e-14)
    D0 = lc.limit_constants(1.0, "paper").D_0
    assert ex.evaluate(1.3) == pytest.approx(-G(2.5) * D0 * 1.3 ** 1.5, rel=1e-12)
    model = lc.levy_exponent(lc.levy_measure(lc.GT_HALF, 1.0, 1.0))
    assert model.evaluate(1.0) == pytest.approx(-2 ** -1.5, rel=1e-12)
    lt = lc.levy_exponent(lc.levy_measure(lc.LT_HALF, 1.0, 1.0))
    assert lt.evaluate(1.0) == pytest.approx(-1 / 3, rel=1e-12)


def test_half_exponent_properties_and_quadrature():
    ex = lc.levy_exponent(lc.levy_measure(lc.EQ_HALF, 1.0, 1.0))
    assert ex.evaluate(0.0) == 0.0
    th = np.array([0.01, 0.5, 1.0, 2.0, 30.0])
    v = ex.evaluate(th)
    np.testing.assert_array_equal(ex.evaluate(-th), v)
    assert np.all(v < 0)
    for t in (0.5, 2.0):
        assert ex.quadrature(t) == pytest.approx(ex.evaluate(t), rel=1e-8)


def test_half_exponent_interpolates_limits():
    gt = lc.levy_exponent(lc.levy_measure(lc.GT_HALF, 0.0, 1.0))
    lt = lc.levy_exponent(lc.levy_measure(lc.LT_HALF, 1.0, 1.0))
    small = lc.levy_exponent(lc.levy_measure(lc.EQ_HALF, 1e-6, 1.0))
    big = lc.levy_exponent(lc.levy_measure(lc.EQ_HALF, 1e6, 1.0))
    assert small.evaluate(1.0) == pytest.approx(gt.evaluate(1.0), rel=1e-3)
    assert big.evaluate(1e2) == pytest.approx(lt.evaluate(1e2) * 1e6 ** (-1 / 3), rel=1e-2)


def test_interpolation_generator_apply():
    freqs = np.array([0.0, 0.25, 1.0])
    zero = lc.interpolation_generator_apply(1.0, 1.0, np.zeros(3), freqs)
    np.testing.assert_array_equal(zero, 0.0)
    const = lc.interpolation_generator_apply(1.0, 1.0, np.array([1.0, 0, 0]), freqs)
    assert const[0] == 0.0
    D0 = lc.limit_constants(1.0, "paper").D_0
    out = lc.interpolation_generator_apply(1.0, 1.0, np.array([0, 1.0, 0]), freqs,
                                           regime=lc.GT_HALF, normalization="paper")
    assert out[1] == pytest.approx(-G(2.5) * D0 * (2 * math.pi * 0.25) ** 1.5, rel=1e-12)
