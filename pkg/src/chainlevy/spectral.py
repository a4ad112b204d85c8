"""Spectral and scattering functions of the magnetized harmonic chain.

All functions are vectorized over the wave number ``k`` (and the branch
``i`` where relevant). Branch-dependent quantities are written in forms that
stay accurate when ``sin(pi k)`` is much smaller than the field.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, SingularityError
from .quadrature import quad

R_BAR = 4.0


@dataclass(frozen=True)
class SpectralParams:
    """Field ``B``, noise intensity ``gamma`` and optional scaling ``(delta, N)``.

    With a scaling attached, every spectral function uses the effective field
    ``B_eff = B * N**(-delta)``.
    """

    B: float
    gamma: float
    delta: Optional[float] = None
    N: Optional[float] = None

    def __post_init__(self):
        if not (self.gamma > 0):
            raise DegenerateInputError(f"gamma must be > 0, got {self.gamma}")
        if not (self.B >= 0):
            raise DegenerateInputError(f"B must be >= 0, got {self.B}")
        if (self.delta is None) != (self.N is None):
            raise DegenerateInputError("delta and N must be given together")
        if self.N is not None:
            if self.N < 1:
                raise DegenerateInputError(f"N must be >= 1, got {self.N}")
            if self.delta < 0:
                raise DegenerateInputError(f"delta must be >= 0, got {self.delta}")

    @property
    def B_eff(self):
        if self.N is None:
            return float(self.B)
        return float(self.B) * float(self.N) ** (-float(self.delta))

    @property
    def scaled(self):
        return self.N is not None

    def unscaled(self):
        """Same physics with the effective field frozen and no scaling."""
        return SpectralParams(self.B_eff, self.gamma)


@dataclass(frozen=True)
class ModeState:
    """Phonon mode ``(k, i)`` with ``k`` in [-1/2, 1/2) and ``i`` in {1, 2}."""

    k: float
    i: int

    def __post_init__(self):
        if not (-0.5 <= self.k < 0.5):
            raise DegenerateInputError(f"k must lie in [-1/2, 1/2), got {self.k}")
        if self.i not in (1, 2):
            raise DegenerateInputError(f"branch must be 1 or 2, got {self.i}")


def wrap_k(k):
    """Map wave numbers to the fundamental cell [-1/2, 1/2)."""
    return np.mod(np.asarray(k, dtype=float) + 0.5, 1.0) - 0.5


def _ki(state_or_k, i):
    if isinstance(state_or_k, ModeState):
        return np.asarray(state_or_k.k, dtype=float), np.asarray(state_or_k.i)
    if i is None:
        raise TypeError("branch index required when k is given directly")
    return np.asarray(state_or_k, dtype=float), np.asarray(i)


def _check_branch(i):
    if not np.all((i == 1) | (i == 2)):
        raise DegenerateInputError("branch index must be 1 or 2")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def alpha_hat(k):
    """Dispersion of the uncharged chain, ``4 sin^2(pi k)``."""
    s = np.sin(np.pi * np.asarray(k, dtype=float))
    return _out(4.0 * s * s)


def _q(B, s):
    # sqrt(alpha_hat + B^2/4), written with b = B/2
    return np.hypot(2.0 * s, 0.5 * B)


def omega(params, k, i):
    """Eigenfrequency of branch ``i``."""
    k = np.asarray(k, dtype=float)
    i = np.asarray(i)
    _check_branch(i)
    B = params.B_eff
    s = np.sin(np.pi * k)
    Q = _q(B, s)
    b = 0.5 * B
    w1 = Q + b
    # Q - b = 4 s^2 / (Q + b) avoids cancellation
    w2 = np.where(Q + b > 0, 4.0 * s * s / np.where(Q + b > 0, Q + b, 1.0), 0.0)
    return _out(np.where(i == 1, w1, w2))


def _theta_sq_raw(B, s, i):
    Q = _q(B, s)
    b = 0.5 * B
    t1 = (Q + b) / (2.0 * Q)
    t2 = 2.0 * s * s / (Q * (Q + b))
    return np.where(i == 1, t1, t2)


def theta_sq(params, k, i):
    """Squared branch weight; the two branches sum to one."""
    k = np.asarray(k, dtype=float)
    i = np.asarray(i)
    _check_branch(i)
    B = params.B_eff
    s = np.sin(np.pi * k)
    if B == 0 and np.any(s == 0):
        raise DegenerateInputError("theta is undefined at k=0 when B=0")
    return _out(_theta_sq_raw(B, s, i))


def group_velocity(params, k):
    """Common derivative of both dispersion branches."""
    k = np.asarray(k, dtype=float)
    B = params.B_eff
    s = np.sin(np.pi * k)
    c = np.cos(np.pi * k)
    if B == 0:
        if np.any(s == 0):
            raise DegenerateInputError("group velocity undefined at k=0 when B=0")
        return _out(2.0 * np.pi * np.sign(s) * c)
    return _out(4.0 * np.pi * s * c / _q(B, s))


def scattering_R(k, k2):
    """Scattering kernel ``16 sin^2(pi k) sin^2(pi k')``."""
    s = np.sin(np.pi * np.asarray(k, dtype=float))
    s2 = np.sin(np.pi * np.asarray(k2, dtype=float))
    return _out(16.0 * s * s * s2 * s2)


def total_rate_R(k):
    """``R(k) = 8 sin^2(pi k)``."""
    s = np.sin(np.pi * np.asarray(k, dtype=float))
    return _out(8.0 * s * s)


def R_bar():
    """Integral of ``R(k)`` over the torus."""
    return R_BAR


def total_rate_R_quad(k):
    """Quadrature twin of :func:`total_rate_R`."""
    val, _ = quad(lambda kp: scattering_R(k, kp), -0.5, 0.5)
    return val


def R_bar_quad():
    """Quadrature twin of :func:`R_bar`."""
    val, _ = quad(total_rate_R, -0.5, 0.5)
    return val


def lambda_holding(params, state, i=None):
    """Mean sojourn scale ``1 / (gamma theta_i^2 R(k))``."""
    k, i = _ki(state, i)
    _check_branch(i)
    s = np.sin(np.pi * k)
    if np.any(s == 0):
        raise SingularityError("holding scale diverges at k=0")
    B = params.B_eff
    Q = _q(B, s)
    b = 0.5 * B
    s2 = s * s
    d1 = 8.0 * s2 * (Q + b) / (2.0 * Q)
    d2 = 16.0 * s2 * s2 / (Q * (Q + b))
    return _out(1.0 / (params.gamma * np.where(i == 1, d1, d2)))


def psi_flight(params, state, i=None):
    """Flight function ``v(k) lambda(k, i)``; odd in ``k``."""
    k, i = _ki(state, i)
    _check_branch(i)
    s = np.sin(np.pi * k)
    if np.any(s == 0):
        raise SingularityError("flight function diverges at k=0")
    c = np.cos(np.pi * k)
    B = params.B_eff
    Q = _q(B, s)
    b = 0.5 * B
    p1 = np.pi * c / (params.gamma * s * (Q + b))
    p2 = np.pi * c * (Q + b) / (4.0 * params.gamma * s * s * s)
    return _out(np.where(i == 1, p1, p2))


def pi_density(params, state, i=None):
    """Density of the invariant measure with respect to ``dk`` on each branch."""
    k, i = _ki(state, i)
    _check_branch(i)
    s = np.sin(np.pi * k)
    B = params.B_eff
    if B == 0:
        return _out(np.broadcast_to(s * s, np.broadcast(s, i).shape).copy())
    return _out(_theta_sq_raw(B, s, i) * 2.0 * s * s)


def pi_normalization(params):
    """Quadrature of the invariant density summed over branches."""
    total = 0.0
    for br in (1, 2):
        val, _ = quad(lambda k: pi_density(params, k, br), -0.5, 0.5)
        total += val
    return total


def dft_mode(x, k):
    """Lattice Fourier transform ``sum_x x(x) exp(-2 pi i k x)``."""
    sites = np.arange(x.shape[-1])
    return np.sum(x * np.exp(-2j * np.pi * k * sites), axis=-1)


def _eigen_combination(params, k, i, q1, q2, p1, p2):
    th = np.sqrt(theta_sq(params, k, i))
    if i == 1:
        w = omega(params, k, 2)
        return th * (p1 - 1j * w * q1 + 1j * p2 + w * q2)
    w = omega(params, k, 1)
    return th * (p1 - 1j * w * q1 - 1j * p2 - w * q2)


def verify_eigenmode(params, L, m, i, rng=None):
    """Relative residual of the eigenmode identity on a periodic lattice.

    A random real configuration ``(q, p)`` of ``L`` sites with two transverse
    components is drawn; the lattice equations of motion
    ``q' = p``, ``p1' = Delta q1 + B p2``, ``p2' = Delta q2 - B p1`` give the
    time derivative. Both are Fourier transformed at ``k = m/L`` and
    ``|d psi/dt + i omega_i psi| / |psi|`` is returned (0 when ``psi`` vanishes
    identically, which happens for branch 2 at ``k = 0``).
    """
    if L < 2 or not (0 <= m < L):
        raise DegenerateInputError(f"need L >= 2 and 0 <= m < L, got L={L}, m={m}")
    if i not in (1, 2):
        raise DegenerateInputError(f"branch must be 1 or 2, got {i}")
    B = params.B_eff
    k = float(wrap_k(m / L))
    if m == 0 and B == 0:
        raise DegenerateInputError("theta undefined for m=0 at B=0")
    rng = np.random.default_rng(rng)
    q = rng.standard_normal((2, L))
    p = rng.standard_normal((2, L))
    lap = np.roll(q, 1, axis=1) + np.roll(q, -1, axis=1) - 2.0 * q
    dq = p
    dp = np.empty_like(p)
    dp[0] = lap[0] + B * p[1]
    dp[1] = lap[1] - B * p[0]
    q1, q2, p1, p2 = (dft_mode(a, k) for a in (q[0], q[1], p[0], p[1]))
    dq1, dq2, dp1, dp2 = (dft_mode(a, k) for a in (dq[0], dq[1], dp[0], dp[1]))
    psi = _eigen_combination(params, k, i, q1, q2, p1, p2)
    dpsi = _eigen_combination(params, k, i, dq1, dq2, dp1, dp2)
    w = omega(params, k, i)
    res = abs(dpsi + 1j * w * psi)
    norm = abs(psi)
    if norm == 0.0:
        return 0.0
    return float(res / norm)
