import json
import math

import numpy as np
import pytest

from chainlevy import experiments as ex
from chainlevy.errors import ConfigError


def cfg(**kw):
    base = dict(B=1.0, gamma=1.0, delta=0.75, N_list=[1e3], M=2000, seed=1)
    base.update(kw)
    return ex.ExperimentConfig(**base)


@pytest.mark.parametrize("bad", [dict(gamma=0.0), dict(M=10), dict(N_list=[]),
                                 dict(N_list=[1e4, 1e3]), dict(start_k=0.0),
                                 dict(delta=0.25, B=0.0), dict(normalization="x")])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        cfg(**bad)


def test_charfn_theta_zero_and_flags():
    rep = ex.charfn_convergence(cfg(thetas=[0.0, 1.0, 2.0]))
    zero = [r for r in rep.rows if r["theta"] == 0.0]
    assert all(r["estimate_re"] == 1.0 and r["estimate_im"] == 0.0 for r in zero)
    for r in rep.rows:
        assert r["passed"] == (r["abs_err"] <= r["tolerance"])
        assert r["tolerance"] == pytest.approx(3 / math.sqrt(2000) + 0.02)
    assert rep.passed


def test_charfn_u_shift_covariance():
    a = ex.charfn_convergence(cfg(thetas=[1.0]), variants=("Z",)).rows[0]
    b = ex.charfn_convergence(cfg(thetas=[1.0], u=1.0), variants=("Z",)).rows[0]
    za = complex(a["estimate_re"], a["estimate_im"]) * np.exp(1j)
    zb = complex(b["estimate_re"], b["estimate_im"])
    assert abs(za - zb) <= 1e-12
    assert b["abs_err"] == pytest.approx(a["abs_err"], abs=1e-12)


def test_charfn_seed_sweep():
    # flags depend only on estimate, interval and theory; with the finite-size
    # allowance a failure is rarer than the nominal 3 sigma level
    fails = 0
    for s in range(20):
        rep = ex.charfn_convergence(cfg(seed=s, thetas=[1.0]), variants=("Z",))
        fails += not rep.passed
    assert fails <= 1


def test_charfn_all_regimes_small():
    for d in (0.25, 0.5, 0.75):
        rep = ex.charfn_convergence(cfg(delta=d, N_list=[1e4], M=5000))
        assert rep.passed, rep.rows


def test_report_serialization():
    rep = ex.charfn_convergence(cfg(thetas=[1.0]), variants=("Z",))
    data = json.loads(rep.to_json())
    assert data["passed"] == rep.passed and data["config"]["delta"] == 0.75
    head = rep.to_csv().splitlines()[0].split(",")
    assert "abs_err" in head and "tolerance" in head


def test_clock():
    rep = ex.clock_convergence(cfg(N_list=[1e3, 1e4], M=500))
    assert rep.checks["paths_monotone"]
    for r in rep.rows:
        assert abs(r["mean_S_T"] - 2.0) <= 0.05


def test_hydro_time_zero_is_initial_data():
    rep = ex.hydro_limit_f(cfg(t=0.0, u=0.2))
    for r in rep.rows:
        assert r["estimate"] == pytest.approx(float(ex.initial_data(0.2, r["k"])), abs=0)


def test_hydro_small():
    rep = ex.hydro_limit_f(cfg(N_list=[1e3], t=0.5, M=20_000))
    assert rep.checks["estimates_within_tolerance"]
    assert rep.checks["start_independence_N1000"]


def test_half_limit_profile_mass():
    p = ex.half_limit_profile(cfg(t=0.5))
    assert p.mass() == pytest.approx(0.443993816168075, rel=1e-10)


def test_k_grid_must_be_odd():
    c = cfg(t=0.5)
    with pytest.raises(ConfigError):
        ex.k_integrated_discrepancy(c, c.params(1e3), 0.27, 4)


def test_second_moment_grows():
    assert ex.second_moment_doubling(cfg(N_list=[1e4], M=3000, seed=0)) > 0.5
