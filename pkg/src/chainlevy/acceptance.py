"""Acceptance checks 1 to 10, each returning a :class:`CriterionResult`."""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import fractional_pde as fp
from . import levy_calculus as lc
from . import spectral as sp
from . import tail_analysis as ta
from .experiments import ExperimentConfig, charfn_convergence, clock_convergence, hydro_limit_f
from .spectral import SpectralParams


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    runtime: float
    budget: float
    details: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def within_budget(self):
        return self.runtime <= self.budget

    @property
    def ok(self):
        return self.passed and self.within_budget

    def line(self):
        status = "PASS" if self.ok else "FAIL"
        return (f"criterion {self.number:2d} [{status}] {self.title} "
                f"({self.runtime:.2f} s, budget {self.budget:g} s)")


def _timed(number, title, budget, fn):
    t0 = time.perf_counter()
    passed, details, info = fn()
    return CriterionResult(number, title, bool(passed), time.perf_counter() - t0,
                           budget, details, info)


def criterion_1():
    def run():
        ks = np.linspace(-0.5, 0.5, 2001)[:-1]
        ks = ks[ks != 0]
        worst = {}
        for B in (0.0, 1.0, 10.0, 1e4):
            P = SpectralParams(B, 1.0)
            s = sp.theta_sq(P, ks, 1) + sp.theta_sq(P, ks, 2)
            worst[f"theta_sum_B{B:g}"] = float(np.max(np.abs(s - 1)))
            worst[f"pi_norm_B{B:g}"] = abs(sp.pi_normalization(P) - 1.0)
            kp = ks[ks > 0]
            v = sp.group_velocity(P, kp)
            worst[f"v_odd_B{B:g}"] = float(np.max(np.abs(sp.group_velocity(P, -kp) + v)))
            for br in (1, 2):
                lam = sp.lambda_holding(P, kp, br)
                psi = sp.psi_flight(P, kp, br)
                worst[f"lambda_even_B{B:g}_{br}"] = float(np.max(
                    np.abs(sp.lambda_holding(P, -kp, br) - lam) / lam))
                worst[f"psi_odd_B{B:g}_{br}"] = float(np.max(
                    np.abs(sp.psi_flight(P, -kp, br) + psi) / np.abs(psi).clip(1e-300)))
        for k in (0.1, 0.25, -0.37):
            worst[f"R_k{k}"] = abs(sp.total_rate_R_quad(k) - sp.total_rate_R(k))
        worst["R_bar"] = abs(sp.R_bar_quad() - sp.R_bar())
        worst["R_bar_is_4"] = abs(sp.R_bar_quad() - 4.0)
        return max(worst.values()) <= 1e-10, worst, {}
    return _timed(1, "spectral identities to 1e-10", 1.0, run)


def criterion_2():
    def run():
        worst = 0.0
        count = 0
        for B in (0.0, 1.0, 10.0):
            P = SpectralParams(B, 1.0)
            for L in (4, 8, 64):
                for m in range(L):
                    if m == 0 and B == 0:
                        continue
                    for br in (1, 2):
                        worst = max(worst, sp.verify_eigenmode(P, L, m, br, rng=1000 * L + m))
                        count += 1
        return worst <= 1e-12, {"max_relative_residual": worst, "modes": count}, {}
    return _timed(2, "eigenmode identity residual <= 1e-12", 1.0, run)


def criterion_3():
    def run():
        r = np.concatenate([np.logspace(-6, 6, 61), -np.logspace(-6, 6, 61)])
        res = 0.0
        for B in (0.0, 1e-4, 1e-2, 1.0, 1e2, 1e4):
            for br in lc.BRANCHES:
                x, _ = lc.solve_x(br, B, 1.0, r)
                res = max(res, float(np.max(lc.root_residual(br, B, 1.0, r, x))))
                if np.any(np.sign(x) != np.sign(r)):
                    res = np.inf
        c = math.pi / 2.0
        asym = {}
        for rr in (0.1, 1.0, 10.0):
            for br in lc.BRANCHES:
                x, _ = lc.solve_x(br, 1e-4, 1.0, rr)
                asym[f"B0_{br}_r{rr}"] = abs(x / (math.sqrt(c) * rr ** -0.5) - 1)
            x, _ = lc.solve_x(lc.PLUS, 1e4, 1.0, rr)
            asym[f"Binf_plus_r{rr}"] = abs(1e4 * x / (c / rr) - 1)
            x, _ = lc.solve_x(lc.MINUS, 1e4, 1.0, rr)
            asym[f"Binf_minus_r{rr}"] = abs(1e4 ** (-1 / 3) * x / (c ** (1 / 3) * rr ** (-1 / 3)) - 1)
        ok = res <= 1e-12 and max(asym.values()) <= 0.01
        return ok, {"max_residual": res, "max_asymptotic_rel_err": max(asym.values())}, asym
    return _timed(3, "implicit roots: residual and asymptotics", 5.0, run)


def criterion_4():
    def run():
        d = {}
        for rr in (0.1, 1.0, 10.0):
            g0 = lc.g_zero(1.0, rr)
            gi = lc.g_infinity(1.0, rr)
            for br in lc.BRANCHES:
                d[f"g0_{br}_r{rr}"] = abs(lc.density_g(br, 1e-4, 1.0, rr) / g0 - 1)
            d[f"ginf_minus_r{rr}"] = abs(1e4 ** (1 / 3) * lc.density_g(lc.MINUS, 1e4, 1.0, rr) / gi - 1)
            d[f"ginf_plus_r{rr}"] = 1e4 ** (1 / 3) * lc.density_g(lc.PLUS, 1e4, 1.0, rr) / gi
        integ = {}
        for reg in lc.REGIMES:
            val, err = lc.levy_measure(reg, 1.0, 1.0).small_jump_integral()
            integ[reg] = (val, err)
        ok = (max(d.values()) <= 0.01
              and all(np.isfinite(v) and e <= 1e-8 for v, e in integ.values()))
        return ok, {"max_density_rel_err": max(d.values()),
                    "integrability": {k: list(v) for k, v in integ.items()}}, d
    return _timed(4, "density limits and Lévy integrability", 10.0, run)


def criterion_5(N=1e6):
    def run():
        P = SpectralParams(1.0, 1.0)
        rs = [0.5, 1.0, 2.0]
        gt = ta.scaled_tail_limit(P, 0.75, rs, [N], normalization="paper")
        eq = ta.scaled_tail_limit(P, 0.5, rs, [N], normalization="paper")
        n_exp = {r: ta.fit_n_exponent(1.0, 1.0, 0.25, r, [1e4, 1e5, N]) for r in rs}
        r_slope = ta.fit_r_slope(1.0, 1.0, 0.25, N, rs)
        target = (5 - 0.25) / 3
        parts = {
            "delta_0.75_within_5pct_of_kappa1": bool(np.all(np.abs(gt.column("rel_err")) <= 0.05)),
            "delta_0.5_within_3pct_of_h": bool(np.all(np.abs(eq.column("rel_err")) <= 0.03)),
            "delta_0.25_N_exponent_within_2pct": all(abs(v / target - 1) <= 0.02 for v in n_exp.values()),
            "delta_0.25_r_slope_within_2pct": abs(r_slope / (-5 / 3) - 1) <= 0.02,
        }
        details = dict(parts)
        details.update({
            "delta_0.75_scaled": list(gt.column("scaled")),
            "delta_0.75_kappa1_theory": list(gt.column("theory")),
            "delta_0.5_scaled": list(eq.column("scaled")),
            "delta_0.5_h_theory": list(eq.column("theory")),
            "delta_0.25_N_exponents": [n_exp[r] for r in rs],
            "delta_0.25_r_slope": r_slope,
        })
        gm = ta.scaled_tail_limit(P, 0.75, rs, [N], normalization="model")
        em = ta.scaled_tail_limit(P, 0.5, rs, [N], normalization="model")
        info = {"model_rel_err_delta_0.75": list(gm.column("rel_err")),
                "model_rel_err_delta_0.5": list(em.column("rel_err"))}
        return all(parts.values()), details, info
    return _timed(5, "tail trichotomy at N=1e6 (published constants)", 60.0, run)


def criterion_6():
    def run():
        thetas = np.logspace(-2, 2, 9)
        worst = 0.0
        for reg in (lc.GT_HALF, lc.LT_HALF):
            ex = lc.levy_exponent(lc.levy_measure(reg, 1.0, 1.0))
            for th in thetas:
                q = ex.quadrature(th)
                c = ex.evaluate(th)
                worst = max(worst, abs(q / c - 1))
        D0 = lc.limit_constants(1.0).D_0
        d0_err = abs(D0 - 2 * lc.KAPPA_0 * (2 / 3) * math.sqrt(2 * math.pi))
        half = lc.levy_exponent(lc.levy_measure(lc.EQ_HALF, 1.0, 1.0))
        pos = np.logspace(-3, 3, 41)
        grid = np.concatenate([-pos[::-1], [0.0], pos])
        vals = half.evaluate(grid)
        props = {
            "phi_zero": half.evaluate(0.0) == 0.0,
            "even": bool(np.all(vals == vals[::-1])),
            "nonpositive": bool(np.all(vals <= 0.0)),
        }
        ok = worst <= 1e-8 and d0_err <= 1e-10 and all(props.values())
        return ok, {"max_closed_vs_quadrature": worst, "D0_abs_err": d0_err, **props}, {}
    return _timed(6, "Lévy exponent consistency", 10.0, run)


def criterion_7(n_points=2 ** 14):
    def run():
        prof = fp.init_profile("mollifier", n_points=n_points)
        t = np.linspace(0.0, 1.0, 21)
        zero = fp.interpolation_limit_study([1, 1e-1, 1e-2, 1e-3, 1e-4], 1.0, prof, t, "zero")
        inf = fp.interpolation_limit_study([1, 1e1, 1e2, 1e3, 1e4], 1.0, prof, t, "infinity")
        rz = zero["rows"][-1]["l2_rel"]
        ri = inf["rows"][-1]["l2_rel"]
        ok = rz <= 0.02 and ri <= 0.02 and zero["monotone"] and inf["monotone"]
        return ok, {"rel_l2_B1e-4": rz, "rel_l2_B1e4": ri, "monotone_zero": zero["monotone"],
                    "monotone_infinity": inf["monotone"]}, {
            "zero_rows": zero["rows"], "infinity_rows": inf["rows"]}
    return _timed(7, "interpolation limits B->0 and B->inf", 30.0, run)


def criterion_8(M=100_000, seed=42):
    def run():
        details, info = {}, {}
        ok = True
        for d in (0.25, 0.5, 0.75):
            cfg = ExperimentConfig(1.0, 1.0, d, [1e4], t=1.0, thetas=[0.5, 1.0, 2.0], M=M, seed=seed)
            rep = charfn_convergence(cfg, variants=("Z",))
            ok &= rep.passed
            details[f"delta_{d}"] = [(r["theta"], r["abs_err"], r["tolerance"]) for r in rep.rows]
            pap = lc.levy_exponent(lc.levy_measure(lc.regime_of(d), 1.0, 1.0, "paper"))
            info[f"delta_{d}_published_constant_theory"] = list(np.exp(pap.evaluate([0.5, 1.0, 2.0])))
            info[f"delta_{d}_estimates"] = [r["estimate_re"] for r in rep.rows]
        return ok, details, info
    return _timed(8, "scaled-process characteristic functions", 1800.0, run)


def criterion_9(M=1000, seed=42):
    def run():
        cfg = ExperimentConfig(1.0, 1.0, 0.75, [1e6], t=1.0, M=M, seed=seed, t0=0.1, clock_eps=0.1)
        rep = clock_convergence(cfg)
        row = rep.rows[-1]
        ok = rep.checks["exceedance_below_0.01"] and rep.checks["mean_within_3sigma"]
        return ok, {k: row[k] for k in ("exceedance", "mean_S_T", "sigma_S_T")}, {}
    return _timed(9, "clock law of large numbers", 300.0, run)


def criterion_10(M=100_000, seed=42):
    def run():
        details = {}
        ok = True
        for d in (0.25, 0.75):
            cfg = ExperimentConfig(1.0, 1.0, d, [1e4], t=0.5, u=0.0, M=M, seed=seed)
            rep = hydro_limit_f(cfg)
            ok &= rep.passed
            details[f"delta_{d}"] = {"rows": [(r["k"], r["i"], r["estimate"], r["sigma"], r["theory"])
                                              for r in rep.rows], "checks": rep.checks}
        return ok, details, {}
    return _timed(10, "hydrodynamic limit of the kinetic solution", 900.0, run)


ALL = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
       criterion_6, criterion_7, criterion_8, criterion_9, criterion_10)


def run_all(seed=42, quick=False):
    """Run every criterion; ``quick`` shrinks the Monte-Carlo ensembles."""
    out = []
    for fn in ALL:
        if fn in (criterion_8, criterion_10):
            out.append(fn(M=10_000 if quick else 100_000, seed=seed))
        elif fn is criterion_9:
            out.append(fn(M=1000, seed=seed))
        else:
            out.append(fn())
    return out
