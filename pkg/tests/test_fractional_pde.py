import math

import numpy as np
import pytest
from scipy.integrate import quad as squad

from chainlevy import fractional_pde as fp
from chainlevy import levy_calculus as lc
from chainlevy.errors import DegenerateInputError, GridMismatchError

HALF = lc.levy_exponent(lc.levy_measure(lc.EQ_HALF, 1.0, 1.0))


def test_mollifier():
    assert fp.mollifier(0.0) == pytest.approx(math.exp(-1.0))
    assert fp.mollifier(0.0, lam=2.0, radius=3.0) == pytest.approx(math.exp(-2 / 9))
    assert fp.mollifier(1.0) == 0.0 and fp.mollifier(-2.0) == 0.0
    assert fp.mollifier(1 - 1e-6) < 1e-200


def test_mollifier_mass_golden():
    ref, _ = squad(lambda u: math.exp(-1 / (1 - u * u)), -1, 1, epsabs=0, epsrel=1e-13)
    assert ref == pytest.approx(0.443993816168075, rel=1e-13)
    assert fp.init_profile("mollifier").mass() == pytest.approx(ref, rel=1e-12)


def test_grid_requires_power_of_two():
    with pytest.raises(DegenerateInputError):
        fp.GridProfile(1.0, np.zeros(12))


def test_evolve_identity_semigroup_mass():
    prof = fp.init_profile("mollifier", n_points=2 ** 12)
    assert np.array_equal(fp.evolve(prof, HALF, 0.0).values, prof.values)
    a = fp.evolve(fp.evolve(prof, HALF, 1.0), HALF, 1.0)
    b = fp.evolve(prof, HALF, 2.0)
    assert np.max(np.abs(a.values - b.values)) <= 1e-12
    assert b.mass() == pytest.approx(prof.mass(), abs=1e-12)
    norms = [fp.l2_norm(fp.evolve(prof, HALF, t)) for t in (0, 0.5, 1, 2)]
    assert np.all(np.diff(norms) <= 0)


def test_gaussian_under_heat_symbol():
    prof = fp.init_profile("gaussian", L=32.0, n_points=2 ** 12, sigma=1.0)
    heat = lambda p: -0.5 * p ** 2 / (4 * math.pi ** 2) * 4 * math.pi ** 2
    out = fp.evolve(prof, heat, 1.0)
    expect = np.exp(-0.25 * prof.u ** 2) / math.sqrt(4 * math.pi)
    assert np.max(np.abs(out.values - expect)) <= 1e-12


def test_fourier_transform_of_gaussian():
    prof = fp.init_profile("gaussian", L=32.0, n_points=2 ** 12)
    ft = prof.fourier()
    expect = np.exp(-2 * math.pi ** 2 * prof.xi ** 2)
    assert np.max(np.abs(ft - expect)) <= 1e-12


def test_distances():
    a = fp.init_profile("mollifier", n_points=2 ** 10)
    b = fp.init_profile("gaussian", n_points=2 ** 10)
    assert fp.l2_distance(a, a) == 0.0
    assert fp.l2_distance(a, b) == pytest.approx(fp.l2_distance(a, b, "fourier"), rel=1e-12)
    a2 = fp.GridProfile(a.L, 2 * a.values)
    b2 = fp.GridProfile(b.L, 2 * b.values)
    assert fp.l2_distance(a2, b2) == pytest.approx(2 * fp.l2_distance(a, b), rel=1e-14)
    with pytest.raises(GridMismatchError):
        fp.l2_distance(a, fp.init_profile("mollifier", n_points=2 ** 11))


def test_interpolation_limits():
    prof = fp.init_profile("mollifier", n_points=2 ** 12)
    t = np.linspace(0, 1, 11)
    zero = fp.interpolation_limit_study([1, 1e-2, 1e-4], 1.0, prof, t, "zero")
    inf = fp.interpolation_limit_study([1, 1e2, 1e4], 1.0, prof, t, "infinity")
    assert zero["monotone"] and inf["monotone"]
    assert zero["rows"][-1]["l2_rel"] <= 0.02
    assert inf["rows"][-1]["l2_rel"] <= 0.02


def test_interpolation_limit_grid_stable():
    t = np.linspace(0, 1, 6)
    vals = []
    for n in (2 ** 12, 2 ** 13):
        prof = fp.init_profile("mollifier", n_points=n)
        vals.append(fp.interpolation_limit_study([1e-2], 1.0, prof, t, "zero")["rows"][0]["l2_rel"])
    assert vals[0] == pytest.approx(vals[1], rel=1e-3)
