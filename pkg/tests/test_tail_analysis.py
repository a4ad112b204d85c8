import math

import numpy as np
import pytest

from chainlevy import levy_calculus as lc
from chainlevy import spectral as sp
from chainlevy import tail_analysis as ta
from chainlevy.spectral import SpectralParams


def test_level_boundary_inverts_flight_function():
    P = SpectralParams(1.0, 1.0)
    for br in (1, 2):
        for level in (0.5, 10.0, 1e4):
            k = ta.level_boundary(P, level, br)
            assert sp.psi_flight(P, k, br) == pytest.approx(level, rel=1e-10)


def test_tail_vanishes_beyond_max():
    P = SpectralParams(1.0, 1.0, 0.75, 10.0)
    assert ta.tail_exact(P, 1e300) == 0.0


def test_tail_symmetry_and_small_r():
    P = SpectralParams(1.0, 1.0, 0.75, 100.0)
    for r in (0.01, 0.3, 2.0):
        assert ta.tail_exact(P, r) == pytest.approx(ta.tail_exact(P, -r), rel=1e-12)
    assert ta.tail_exact(P, 1e-9) == pytest.approx(0.5, abs=1e-6)


def test_tail_nonincreasing():
    P = SpectralParams(1.0, 1.0, 0.5, 1e4)
    vals = [ta.tail_exact(P, r) for r in np.logspace(-3, 2, 30)]
    assert np.all(np.diff(vals) <= 0)


def test_tail_empirical_agrees_with_exact():
    P = SpectralParams(1.0, 1.0, 0.75, 10.0)
    exact = ta.tail_exact(P, 0.2)
    p, lo, hi = ta.tail_empirical(P, 0.2, 10 ** 6, np.random.default_rng(5))
    assert lo <= exact <= hi
    p2, lo2, hi2 = ta.tail_empirical(P, 0.2, 2 * 10 ** 6, np.random.default_rng(6))
    assert (hi - lo) / (hi2 - lo2) == pytest.approx(math.sqrt(2), rel=0.02)


def test_boundary_root_scaled_matches_bisection():
    for delta in (0.25, 0.5, 0.75):
        N = 1e6
        P = SpectralParams(1.0, 1.0, delta, N)
        for br, idx in ((lc.PLUS, 1), (lc.MINUS, 2)):
            _, k = ta.boundary_root_scaled(br, 1.0, 1.0, delta, N, 1.0)
            assert k == pytest.approx(ta.level_boundary(P, N, idx), rel=1e-9)


def test_model_tail_limits_at_large_N():
    P = SpectralParams(1.0, 1.0)
    for delta, tol in ((0.75, 0.01), (0.5, 0.01), (0.25, 0.03)):
        rep = ta.scaled_tail_limit(P, delta, [0.5, 1.0, 2.0], [1e6])
        assert np.max(np.abs(rep.column("rel_err"))) <= tol


def test_lt_half_exponents():
    target = (5 - 0.25) / 3
    assert ta.fit_n_exponent(1.0, 1.0, 0.25, 1.0, [1e4, 1e5, 1e6]) == pytest.approx(target, rel=0.02)
    assert ta.fit_r_slope(1.0, 1.0, 0.25, 1e6, [0.5, 1.0, 2.0]) == pytest.approx(-5 / 3, rel=0.02)


def test_gt_half_r_slope():
    assert ta.fit_r_slope(1.0, 1.0, 0.75, 1e6, [0.5, 1.0, 2.0]) == pytest.approx(-1.5, rel=0.02)


def test_report_schema():
    rep = ta.scaled_tail_limit(SpectralParams(1.0, 1.0), 0.5, [1.0], [1e3, 1e4])
    lines = rep.to_csv().splitlines()
    assert lines[0] == ",".join(ta.TAIL_COLUMNS)
    assert len(lines) == 3
    with pytest.raises(ValueError):
        ta.scaled_tail_limit(SpectralParams(1.0, 1.0), 0.5, [1.0], [1e4, 1e3])
