"""Tails of the flight function under the invariant measure.

``tail_exact`` integrates the invariant density over the super-level set of
``Psi(., i)``; the boundary is found by bisection, which is valid because
``Psi(., i)`` is decreasing on (0, 1/2) (checked on a grid before use).
"""

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import levy_calculus as lc
from . import spectral as sp
from .errors import NonConvergenceError
from .quadrature import quad
from .spectral import SpectralParams

TAIL_COLUMNS = ("N", "r", "tail", "scaled", "theory", "rel_err")


@lru_cache(maxsize=256)
def _validate_monotone(B, gamma, n_grid=10_000):
    P = SpectralParams(B, gamma)
    k = np.linspace(0.0, 0.5, n_grid + 1)[1:-1]
    for br in (1, 2):
        psi = sp.psi_flight(P, k, br)
        if np.any(np.diff(psi) >= 0):
            raise NonConvergenceError(
                f"flight function not decreasing on (0, 1/2) for branch {br}, B={B}")
    return True


def level_boundary(params, level, branch):
    """``k`` in (0, 1/2) with ``Psi(k, branch) = level`` (``level > 0``)."""
    P = params.unscaled()
    _validate_monotone(P.B, P.gamma)
    f = lambda k: sp.psi_flight(P, k, branch)
    # bisection in log k; Psi decreases from +inf to 0
    lo, hi = -200.0, np.log(0.5)
    if f(np.exp(lo)) < level:
        return 0.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if f(np.exp(mid)) > level:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return float(np.exp(0.5 * (lo + hi)))


def tail_exact(params, r):
    """``pi(Psi > N r)`` for ``r > 0`` and ``pi(Psi < N r)`` for ``r < 0``."""
    if r == 0:
        raise ValueError("r must be nonzero")
    N = float(params.N) if params.N is not None else 1.0
    P = params.unscaled()
    level = N * abs(r)
    total = 0.0
    for br in (1, 2):
        kb = level_boundary(params, level, br)
        if kb <= 0.0:
            continue
        val, _ = quad(lambda k: sp.pi_density(P, k, br), 0.0, kb,
                      abs_tol=0.0, rel_tol=1e-12)
        total += val
    return total


def tail_empirical(params, r, n_samples, rng):
    """Monte-Carlo tail with a binomial 3-sigma interval ``(p, lo, hi)``."""
    from .kinetic_process import sample_pi_many

    N = float(params.N) if params.N is not None else 1.0
    k, i = sample_pi_many(params.unscaled(), rng, int(n_samples))
    psi = sp.psi_flight(params.unscaled(), k, i)
    hits = psi > N * r if r > 0 else psi < N * r
    p = float(np.mean(hits))
    half = 3.0 * np.sqrt(max(p * (1.0 - p), 0.0) / n_samples)
    return p, p - half, p + half


def tail_limit(delta, B, gamma, r, normalization="model"):
    """Limit of ``N^{alpha_delta} pi(Psi > N r)`` for ``r > 0``."""
    r = abs(r)
    regime = lc.regime_of(delta)
    if normalization not in lc.NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    model = normalization == "model"
    if regime == lc.GT_HALF:
        c = lc.KAPPA_1 * (8.0 if model else 1.0)
        return c * gamma ** -1.5 * r ** -1.5
    if regime == lc.EQ_HALF:
        Bh = 0.5 * B if model else B
        h = lc.primitive_h(lc.PLUS, Bh, gamma, r) + lc.primitive_h(lc.MINUS, Bh, gamma, r)
        return h * (8.0 if model else 1.0)
    c = lc.KAPPA_2 * (8.0 * 0.6 * 2.0 ** (1.0 / 3.0) if model else 1.0)
    return c * gamma ** (-5.0 / 3.0) * B ** (-1.0 / 3.0) * r ** (-5.0 / 3.0)


def boundary_root_scaled(branch, B, gamma, delta, N, r):
    """Boundary in the variable ``x = sin(pi k) N^delta`` and the matching ``k``.

    Solves ``x (sqrt(4 x^2 + B^2/4) +/- B/2) / sqrt(1 - x^2 N^{-2 delta})
    = pi N^{2 delta - 1} / (gamma r)``; used as a cross-check of the bisection.
    """
    sgn = 1.0 if branch == lc.PLUS else -1.0
    nd = float(N) ** delta
    rhs = np.pi * float(N) ** (2 * delta - 1) / (gamma * r)

    def f(lx):
        x = np.exp(lx)
        c = np.sqrt(max(1.0 - (x / nd) ** 2, 0.0))
        q = np.sqrt(4 * x * x + B * B / 4.0)
        core = q + sgn * B / 2.0 if sgn > 0 else 4 * x * x / (q + B / 2.0)
        return np.log(x * core) - np.log(rhs * c) if c > 0 else np.inf

    lx = brentq(f, -100.0, np.log(nd) - 1e-15, xtol=1e-15, rtol=1e-15, maxiter=500)
    x = np.exp(lx)
    return x, float(np.arcsin(min(x / nd, 1.0)) / np.pi)


@dataclass
class TailReport:
    """Exact tails, their scaling and the theoretical limit on a grid."""

    B: float
    gamma: float
    delta: float
    normalization: str
    rows: list = field(default_factory=list)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TAIL_COLUMNS)
        for row in self.rows:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def column(self, name):
        j = TAIL_COLUMNS.index(name)
        return np.array([row[j] for row in self.rows])


def scaled_tail_limit(params, delta, r_grid, N_sequence, normalization="model"):
    """Scaled tails ``N^{alpha_delta} pi(Psi > N r)`` against their limit."""
    N_sequence = list(N_sequence)
    if any(b <= a for a, b in zip(N_sequence, N_sequence[1:])):
        raise ValueError("N_sequence must be increasing")
    alpha = lc.alpha_of(delta)
    rep = TailReport(params.B, params.gamma, delta, normalization)
    theory = {r: tail_limit(delta, params.B, params.gamma, r, normalization) for r in r_grid}
    for N in N_sequence:
        P = SpectralParams(params.B, params.gamma, delta, N)
        for r in r_grid:
            t = tail_exact(P, r)
            s = float(N) ** alpha * t
            th = theory[r]
            rep.rows.append((float(N), float(r), t, s, th, (s - th) / th))
    return rep


def fit_n_exponent(B, gamma, delta, r, N_sequence):
    """Least-squares slope of ``-log tail`` against ``log N``."""
    logs = [np.log(tail_exact(SpectralParams(B, gamma, delta, N), r)) for N in N_sequence]
    slope = np.polyfit(np.log(np.asarray(N_sequence, dtype=float)), logs, 1)[0]
    return float(-slope)


def fit_r_slope(B, gamma, delta, N, r_grid):
    """Least-squares slope of ``log tail`` against ``log r`` at fixed ``N``."""
    P = SpectralParams(B, gamma, delta, N)
    logs = [np.log(tail_exact(P, r)) for r in r_grid]
    return float(np.polyfit(np.log(np.asarray(r_grid, dtype=float)), logs, 1)[0])
