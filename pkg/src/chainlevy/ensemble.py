"""Fast ensemble simulation of the rescaled flight process.

The number of jumps up to the macroscopic horizon grows like ``N^alpha``
(about ``10^6`` to ``10^9`` per trajectory in the experiments), so jumps are
split by the invariant measure into two regions:

* the *tail* region, small ``|k|`` where the holding scale or the flight
  function is large; these jumps are drawn exactly;
* the *bulk* region; runs of consecutive bulk jumps are aggregated into a
  bivariate Gaussian for (sum of ``v * holding``, sum of holdings) with
  moments computed by quadrature.

The number of bulk jumps between two tail jumps is geometric. A run is
aggregated only when its holding sum stays, at six standard deviations, a
window of ``l_min`` mean holdings short of the next target time; jumps inside
that window are simulated exactly, so the state occupied at a target time is
drawn from the exact renewal dynamics.

Setting ``exact=True`` makes every jump a tail jump (plain jump-by-jump
simulation with the same code path), which is how the aggregation is
validated.
"""

from dataclasses import dataclass

import numba
import numpy as np

from . import spectral as sp
from .errors import BudgetError
from .quadrature import quad

ETA_DEFAULT = 0.01


@dataclass(frozen=True)
class SamplerTables:
    """Region boundaries and bulk moments for one effective field."""

    B: float
    gamma: float
    kstar1: float
    kstar2: float
    p_tail: float
    q1: float
    env1: float
    env2: float
    mean_h: float
    var_h: float
    var_d: float
    l_min: int

    def as_array(self):
        return np.array([self.B, self.gamma, self.kstar1, self.kstar2, self.p_tail,
                         self.q1, self.env1, self.env2, self.mean_h, self.var_h,
                         self.var_d, float(self.l_min)])


def _decreasing_root(fun, level):
    """Largest ``k`` in (0, 1/2) with ``fun(k) >= level`` for a decreasing ``fun``."""
    if fun(0.5 - 1e-15) >= level:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fun(mid) >= level:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    return hi


def build_tables(params, lambda_cut, psi_cut, exact=False):
    """Tail boundaries and bulk moments for thresholds on ``lambda`` and ``|Psi|``."""
    P = params.unscaled()
    g = P.gamma
    if exact:
        k1 = k2 = 0.5
    else:
        ks = []
        for br in (1, 2):
            a = _decreasing_root(lambda k: sp.lambda_holding(P, k, br), lambda_cut)
            b = _decreasing_root(lambda k: sp.psi_flight(P, k, br), psi_cut)
            ks.append(max(a, b))
        k1, k2 = ks
    masses = []
    for br, kst in ((1, k1), (2, k2)):
        m, _ = quad(lambda k: sp.pi_density(P, k, br), 0.0, kst, abs_tol=1e-14, rel_tol=1e-12)
        masses.append(2.0 * m)
    p_tail = min(1.0, masses[0] + masses[1])
    q1 = masses[0] / (masses[0] + masses[1]) if p_tail > 0 else 0.5
    env1 = float(sp.pi_density(P, k1, 1)) if k1 > 0 else 0.0
    env2 = float(sp.pi_density(P, k2, 2)) if k2 > 0 else 0.0
    p_bulk = 1.0 - p_tail
    if p_bulk <= 1e-14 or exact:
        return SamplerTables(P.B, g, k1, k2, 1.0, q1, env1, env2, 0.0, 0.0, 0.0, 1)
    # lambda * pi_density = 1 / (4 gamma) on both branches
    m1 = m2 = md = 0.0
    for br, kst in ((1, k1), (2, k2)):
        if kst >= 0.5:
            continue
        m1 += 2.0 * (0.5 - kst) / (4.0 * g)
        v, _ = quad(lambda k: sp.lambda_holding(P, k, br) / (4.0 * g), kst, 0.5,
                    abs_tol=1e-13, rel_tol=1e-11)
        m2 += 2.0 * v
        v, _ = quad(lambda k: sp.group_velocity(P, k) ** 2 * sp.lambda_holding(P, k, br) / (4.0 * g),
                    kst, 0.5, abs_tol=1e-13, rel_tol=1e-11)
        md += 2.0 * v
    mean_h = m1 / p_bulk
    var_h = 2.0 * m2 / p_bulk - mean_h ** 2
    var_d = 2.0 * md / p_bulk
    l_min = int(max(64, np.ceil(16.0 * var_h / mean_h ** 2)))
    return SamplerTables(P.B, g, k1, k2, p_tail, q1, env1, env2, mean_h, var_h, var_d, l_min)


def default_tables(params, exact=False, eta=ETA_DEFAULT):
    """Tables with thresholds ``eta * N`` on ``lambda`` and ``2 pi eta N`` on ``Psi``."""
    N = float(params.N) if params.N is not None else 1.0
    cut = eta * N
    return build_tables(params, cut, 2.0 * np.pi * cut, exact=exact)


# ---------------------------------------------------------------- numba core

@numba.njit(cache=True)
def _q(B, s):
    return np.sqrt(4.0 * s * s + 0.25 * B * B)


@numba.njit(cache=True)
def _theta1(B, s):
    Q = _q(B, s)
    return (Q + 0.5 * B) / (2.0 * Q)


@numba.njit(cache=True)
def _pi_dens(B, k, br):
    s = np.sin(np.pi * k)
    Q = _q(B, s)
    b = 0.5 * B
    if br == 1:
        return (Q + b) / (2.0 * Q) * 2.0 * s * s
    return 4.0 * s ** 4 / (Q * (Q + b))


@numba.njit(cache=True)
def _lam(B, g, k, br):
    s = np.sin(np.pi * k)
    Q = _q(B, s)
    b = 0.5 * B
    s2 = s * s
    if br == 1:
        d = 8.0 * s2 * (Q + b) / (2.0 * Q)
    else:
        d = 16.0 * s2 * s2 / (Q * (Q + b))
    return 1.0 / (g * d)


@numba.njit(cache=True)
def _vel(B, k):
    s = np.sin(np.pi * k)
    c = np.cos(np.pi * k)
    if B == 0.0:
        if s > 0:
            return 2.0 * np.pi * c
        return -2.0 * np.pi * c
    return 4.0 * np.pi * s * c / _q(B, s)


@numba.njit(cache=True)
def _uniform_open(rng):
    # uniform on (0, 1]
    return 1.0 - rng.random()


@numba.njit(cache=True)
def _draw_full(rng, B):
    while True:
        k = rng.random() - 0.5
        if k == 0.0:
            continue
        s = np.sin(np.pi * k)
        if rng.random() < s * s:
            break
    if rng.random() < _theta1(B, np.sin(np.pi * k)):
        return k, 1
    return k, 2


@numba.njit(cache=True)
def _draw_tail(rng, tab):
    B = tab[0]
    if rng.random() < tab[5]:
        br, kst, env = 1, tab[2], tab[6]
    else:
        br, kst, env = 2, tab[3], tab[7]
    while True:
        k = rng.random() * kst
        if k == 0.0 or k >= 0.5:
            continue
        if rng.random() * env <= _pi_dens(B, k, br):
            break
    if rng.random() < 0.5:
        k = -k
    return k, br


@numba.njit(cache=True)
def _in_tail(tab, k, br):
    a = abs(k)
    if br == 1:
        return a < tab[2]
    return a < tab[3]


@numba.njit(cache=True)
def _draw_bulk(rng, tab):
    while True:
        k, br = _draw_full(rng, tab[0])
        if not _in_tail(tab, k, br):
            return k, br


@numba.njit(cache=True)
def _draw_gap(rng, p):
    if p >= 1.0:
        return 0
    if p <= 0.0:
        return 1 << 62
    g = np.floor(np.log(_uniform_open(rng)) / np.log1p(-p))
    if g > 4.0e18:
        return 1 << 62
    return np.int64(g)


@numba.njit(cache=True)
def _aggregate(rng, tab, L):
    """Sum of ``L`` bulk (v * holding, holding) pairs, Gaussian approximation."""
    d = np.sqrt(L * tab[10]) * rng.standard_normal()
    h = L * tab[8] + np.sqrt(L * tab[9]) * rng.standard_normal()
    if h < 0.0:
        h = 0.0
    return d, h


@numba.njit(cache=True)
def _safe_len(tab, R):
    """Largest run length whose aggregated holding stays below ``R`` at 6 sigma.

    A window of ``l_min`` mean holdings before ``R`` is reserved for exact jumps.
    """
    mu = tab[8]
    sd = np.sqrt(tab[9])
    room = R - tab[11] * mu
    if room <= 0.0:
        return np.int64(0)
    x = (-6.0 * sd + np.sqrt(36.0 * sd * sd + 4.0 * mu * room)) / (2.0 * mu)
    return np.int64(np.floor(x * x))


@numba.njit(cache=True)
def _run_one(rng, tab, k0, i0, from_pi, times, cap, out_d, out_k, out_i, out_n, row):
    """Advance one trajectory through the sorted target ``times``.

    Returns 0 on success and 1 when the jump cap is exceeded.
    """
    B = tab[0]
    g = tab[1]
    p = tab[4]
    l_min = np.int64(tab[11])
    if from_pi:
        k, br = _draw_full(rng, B)
    else:
        k, br = k0, i0
    h = _lam(B, g, k, br) * (-np.log(_uniform_open(rng)))
    H = 0.0
    Hc = 0.0
    D = 0.0
    count = np.int64(0)
    gap = _draw_gap(rng, p)
    for jt in range(times.shape[0]):
        T = times[jt]
        while H + h <= T:
            # close the current sojourn
            D += _vel(B, k) * h
            y = h - Hc
            t = H + y
            Hc = (t - H) - y
            H = t
            count += 1
            if count > cap:
                return 1
            # aggregate pending bulk jumps only while they surely end before T
            while gap >= l_min and p < 1.0:
                L = _safe_len(tab, T - H)
                if L > gap:
                    L = gap
                if L < l_min:
                    break
                dg, hg = _aggregate(rng, tab, L)
                if H + hg >= T:
                    break
                D += dg
                y = hg - Hc
                t = H + y
                Hc = (t - H) - y
                H = t
                count += L
                gap -= L
                if count > cap:
                    return 1
            if gap == 0:
                k, br = _draw_tail(rng, tab)
                gap = _draw_gap(rng, p)
            else:
                k, br = _draw_bulk(rng, tab)
                gap -= 1
            h = _lam(B, g, k, br) * (-np.log(_uniform_open(rng)))
        out_d[row, jt] = D + _vel(B, k) * (T - H)
        out_k[row, jt] = k
        out_i[row, jt] = br
        out_n[row, jt] = count
    return 0


def trajectory_rng(seed, index):
    """Independent generator of trajectory ``index`` under master ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


def _ensemble(tab, k0, i0, from_pi, times, cap, seed, first, m):
    nt = times.shape[0]
    out_d = np.empty((m, nt))
    out_k = np.empty((m, nt))
    out_i = np.empty((m, nt), dtype=np.int8)
    out_n = np.empty((m, nt), dtype=np.int64)
    status = np.zeros(m, dtype=np.int8)
    for r in range(m):
        status[r] = _run_one(trajectory_rng(seed, first + r), tab, k0, i0, from_pi, times,
                             cap, out_d, out_k, out_i, out_n, r)
    return out_d, out_k, out_i, out_n, status


@numba.njit(cache=True)
def _fixed_one(rng, tab, from_pi, k0, i0, m_jumps):
    """Sum of ``v * holding`` over the first ``m_jumps + 1`` sojourns."""
    B = tab[0]
    g = tab[1]
    p = tab[4]
    l_min = np.int64(tab[11])
    if from_pi:
        k, br = _draw_full(rng, B)
    else:
        k, br = k0, i0
    D = _vel(B, k) * _lam(B, g, k, br) * (-np.log(_uniform_open(rng)))
    remaining = np.int64(m_jumps)
    while remaining > 0:
        gap = _draw_gap(rng, p)
        L = gap if gap < remaining else remaining
        if L > l_min:
            dg, hg = _aggregate(rng, tab, L)
            D += dg
        else:
            for _ in range(L):
                k, br = _draw_bulk(rng, tab)
                D += _vel(B, k) * _lam(B, g, k, br) * (-np.log(_uniform_open(rng)))
        remaining -= L
        if remaining > 0:
            k, br = _draw_tail(rng, tab)
            D += _vel(B, k) * _lam(B, g, k, br) * (-np.log(_uniform_open(rng)))
            remaining -= 1
    return D


def _fixed_count(tab, from_pi, k0, i0, m_jumps, seed, first, m):
    return np.array([_fixed_one(trajectory_rng(seed, first + r), tab, from_pi, k0, i0, m_jumps)
                     for r in range(m)])


# ---------------------------------------------------------------- public API

@dataclass
class EnsembleResult:
    """Raw per-trajectory results at the target times.

    ``displacement[r, j]`` is ``integral_0^{T_j} v(K(s)) ds`` (not yet divided
    by ``2 pi``); ``count[r, j]`` is the number of completed sojourns by
    ``T_j``.
    """

    times: np.ndarray
    displacement: np.ndarray
    k: np.ndarray
    branch: np.ndarray
    count: np.ndarray
    tables: SamplerTables


def jump_cap(gamma, T):
    """Jump budget for a horizon ``T``: 16 times the mean count plus 6 sigma."""
    mean = 2.0 * gamma * T
    base = 16.0 * np.ceil(mean)
    return int(base + 6.0 * np.sqrt(base) + 64)


def simulate_ensemble(params, times, m, seed, start=None, exact=False, tables=None,
                      first_index=0, cap=None):
    """Simulate ``m`` trajectories up to the raw (unscaled) ``times``.

    ``start`` is a :class:`ModeState` (``None`` draws ``X_0`` from ``pi``).
    Trajectory ``r`` draws from :func:`trajectory_rng` ``(seed, first_index + r)``,
    so results do not depend on how an ensemble is split into chunks.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or np.any(times < 0):
        raise ValueError("times must be nonnegative and sorted")
    tab = tables if tables is not None else default_tables(params, exact=exact)
    if cap is None:
        cap = jump_cap(params.gamma, float(times[-1]))
    k0, i0 = (0.3, 1) if start is None else (start.k, start.i)
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    d, k, i, n, status = _ensemble(tab.as_array(), float(k0), int(i0), start is None,
                                   times, np.int64(cap), int(seed), int(first_index), int(m))
    if status.any():
        bad = int(np.argmax(status))
        raise BudgetError(f"trajectory {first_index + bad} exceeded the jump cap {cap}")
    return EnsembleResult(times, d, k, i.astype(np.int64), n, tab)


def simulate_fixed_count(params, m_jumps, m, seed, start=None, exact=False, tables=None,
                         first_index=0):
    """Sum of ``v * holding`` over ``m_jumps + 1`` sojourns for ``m`` chains."""
    tab = tables if tables is not None else default_tables(params, exact=exact)
    k0, i0 = (0.3, 1) if start is None else (start.k, start.i)
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return _fixed_count(tab.as_array(), start is None, float(k0), int(i0),
                        np.int64(m_jumps), int(seed), int(first_index), int(m))
