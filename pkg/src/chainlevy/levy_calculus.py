"""Implicit roots, Lévy densities, Lévy measures and exponents.

Two normalizations of the limiting Lévy measures are available:

``"model"`` (default)
    Prefactors derived from the exact tails of the flight function under the
    invariant measure, composed with the Exp(1) holding times. Monte-Carlo
    simulation of the rescaled flight process converges to these.
``"paper"``
    The closed-form prefactors exactly as published. They differ from the
    model ones by constant factors and, at the critical scaling, by the field
    argument (see the project notes).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DegenerateInputError, NonConvergenceError, QuadratureError
from .quadrature import gl_panels, quad

PLUS = "plus"
MINUS = "minus"
BRANCHES = (PLUS, MINUS)

GT_HALF = "delta_gt_half"
EQ_HALF = "delta_eq_half"
LT_HALF = "delta_lt_half"
REGIMES = (GT_HALF, EQ_HALF, LT_HALF)

NORMALIZATIONS = ("model", "paper")
TAU_MOMENTS = ("tail", "alpha_delta")

KAPPA_0 = 1.0 / (32.0 * np.pi)
KAPPA_1 = np.sqrt(np.pi) / (3.0 * 2.0 ** 3.5)
KAPPA_2 = np.pi ** (2.0 / 3.0) / (3.0 * 2.0 ** (11.0 / 3.0))
KAPPA_INF = (1.0 / (2.0 ** 13 * 27.0 * np.pi ** 3)) ** (1.0 / 3.0)

# ratio model/paper of the power-law prefactors
MODEL_FACTOR_GT = 8.0
MODEL_FACTOR_LT = 8.0 * 2.0 ** (1.0 / 3.0)


def regime_of(delta):
    """Regime tag for a field-scaling exponent."""
    if delta > 0.5:
        return GT_HALF
    if delta == 0.5:
        return EQ_HALF
    return LT_HALF


def alpha_of(delta):
    """Tail index of the flight function at scaling ``delta``."""
    if delta >= 0.5:
        return 1.5
    return (5.0 - delta) / 3.0


def _check_branch(branch):
    if branch not in BRANCHES:
        raise DegenerateInputError(f"branch must be 'plus' or 'minus', got {branch!r}")


def _check_common(B, gamma):
    if not (gamma > 0):
        raise DegenerateInputError(f"gamma must be > 0, got {gamma}")
    if not (B >= 0):
        raise DegenerateInputError(f"B must be >= 0, got {B}")


def _relation(branch, B, x):
    """Left-hand side F(x) of the root equation and its derivative."""
    q = np.hypot(x, 0.5 * B)
    if branch == PLUS:
        F = x * (2.0 * q + B)
        dF = 2.0 * q + B + 2.0 * x * x / q
    else:
        den = 2.0 * q + B
        F = 4.0 * x ** 3 / den
        dF = 4.0 * x * x / den + 2.0 * x * x / q
    return F, dF


def _weight(branch, B, x):
    q = np.hypot(x, 0.5 * B)
    if branch == PLUS:
        return (2.0 * q + B) / (4.0 * q)
    return x * x / (q * (2.0 * q + B))


def _solve_positive(branch, B, target, rtol=1e-12):
    """Root of F(x) = target for target > 0 (arrays)."""
    target = np.asarray(target, dtype=float)
    b = 0.5 * B
    if branch == PLUS:
        hi = np.sqrt(target / 2.0)
        lo = target / (2.0 * np.hypot(hi, b) + B)
    else:
        lo = np.sqrt(target / 2.0)
        hi = np.maximum(np.sqrt(2.0 * target), np.cbrt(2.0 * B * target))
    lo = lo * 0.5
    hi = hi * 2.0
    for _ in range(200):
        bad = _relation(branch, B, lo)[0] > target
        if not bad.any():
            break
        lo = np.where(bad, lo * 0.5, lo)
    for _ in range(200):
        bad = _relation(branch, B, hi)[0] < target
        if not bad.any():
            break
        hi = np.where(bad, hi * 2.0, hi)
    # bisection in log x down to relative width 1e-3
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(200):
        if np.all(lhi - llo <= 1e-3):
            break
        mid = 0.5 * (llo + lhi)
        above = _relation(branch, B, np.exp(mid))[0] > target
        lhi = np.where(above, mid, lhi)
        llo = np.where(above, llo, mid)
    x = np.exp(0.5 * (llo + lhi))
    lo, hi = np.exp(llo), np.exp(lhi)
    for _ in range(60):
        F, dF = _relation(branch, B, x)
        step = (F - target) / dF
        xn = np.clip(x - step, lo, hi)
        done = np.abs(xn - x) <= 1e-15 * x
        x = xn
        if done.all():
            break
    F, dF = _relation(branch, B, x)
    resid = np.abs(F / target - 1.0)
    if np.any(resid > rtol):
        raise NonConvergenceError(
            f"root residual {resid.max():.3e} above {rtol:.1e} ({branch}, B={B})")
    return x, dF


def solve_x(branch, B, gamma, r):
    """Implicit root ``x`` and its derivative ``x'`` at ``r`` (vectorized).

    ``x`` solves ``(2 sqrt(x^2 + B^2/4) +/- B) x = pi / (gamma r)``; it is odd
    in ``r`` and ``x'`` is even. The derivative comes from the differentiated
    relation.
    """
    _check_branch(branch)
    _check_common(B, gamma)
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise DegenerateInputError("r must be nonzero")
    a = np.abs(r)
    target = np.pi / (gamma * a)
    x, dF = _solve_positive(branch, float(B), target)
    xp = -(target / a) / dF
    x = np.sign(r) * x
    if np.ndim(r) == 0:
        return float(x), float(xp)
    return x, xp


def root_residual(branch, B, gamma, r, x):
    """Relative residual of the defining relation at ``(r, x)``."""
    r = np.asarray(r, dtype=float)
    x = np.asarray(x, dtype=float)
    F, _ = _relation(branch, B, np.abs(x))
    return np.abs(F / (np.pi / (gamma * np.abs(r))) - 1.0)


def density_g(branch, B, gamma, r):
    """Lévy density ``g_{B,+/-}``; positive and even in ``r``."""
    r = np.asarray(r, dtype=float)
    x, xp = solve_x(branch, B, gamma, np.abs(r))
    g = -xp / (4.0 * np.pi) * _weight(branch, B, x) * x * x
    return float(g) if np.ndim(g) == 0 else g


def density_G(B, gamma, r):
    """Sum of both branch densities."""
    return density_g(PLUS, B, gamma, r) + density_g(MINUS, B, gamma, r)


def _h_single(branch, B, gamma, a):
    x, _ = solve_x(branch, B, gamma, a)
    b = 0.5 * B
    pts = [b] if 0 < b < x else None
    val, _ = quad(lambda y: _weight(branch, B, y) * y * y, 0.0, x,
                  abs_tol=1e-13 * max(x ** 3, 1e-300), rel_tol=1e-12,
                  points=pts)
    return val / (4.0 * np.pi)


def primitive_h(branch, B, gamma, r):
    """``(1/4 pi) * integral_0^{x(|r|)} w(y) y^2 dy`` by adaptive quadrature."""
    _check_branch(branch)
    r = np.asarray(r, dtype=float)
    if np.any(r == 0):
        raise DegenerateInputError("r must be nonzero")
    out = np.array([_h_single(branch, float(B), gamma, float(abs(v)))
                    for v in np.ravel(r)])
    return float(out[0]) if np.ndim(r) == 0 else out.reshape(r.shape)


def primitive_h_closed(branch, B, gamma, r):
    """Closed-form twin of :func:`primitive_h` (cancellation-prone for ``minus``)."""
    x, _ = solve_x(branch, B, gamma, np.abs(np.asarray(r, dtype=float)))
    b = 0.5 * B
    q = np.hypot(x, b)
    core = x * q - (b * b * np.arcsinh(x / b) if b > 0 else 0.0)
    sign = 1.0 if branch == PLUS else -1.0
    return (x ** 3 / 6.0 + sign * 0.25 * B * 0.5 * core) / (4.0 * np.pi)


def g_zero(gamma, r):
    """Zero-field limit of both branch densities."""
    return np.sqrt(np.pi / (2.0 ** 11 * gamma ** 3)) * np.abs(r) ** -2.5


def g_infinity(gamma, r):
    """Large-field limit of ``B^{1/3} g_{B,-}``."""
    return (np.pi ** 2 / (2.0 ** 11 * 27.0 * gamma ** 5)) ** (1.0 / 3.0) * np.abs(r) ** (-8.0 / 3.0)


def stable_integral_exact(alpha):
    """``integral_0^inf (1 - cos u) u^{-1-alpha} du`` for 0 < alpha < 2."""
    return float(-gamma_fn(-alpha) * np.cos(np.pi * alpha / 2.0))


def stable_integral(alpha):
    """Quadrature of the stable-law integral with analytic tail closure.

    Returns ``(value, error_estimate)``: the body on [0, 1], the power tail
    ``1/alpha`` on [1, inf) and the oscillatory remainder by a Fourier
    integral rule.
    """
    body, e1 = quad(lambda u: 2.0 * np.sin(0.5 * u) ** 2 * u ** (-1.0 - alpha),
                    0.0, 1.0, abs_tol=1e-14, rel_tol=1e-13)
    osc, e2 = quad(lambda u: u ** (-1.0 - alpha), 1.0, np.inf,
                   weight="cos", wvar=1.0, abs_tol=1e-13, rel_tol=1e-13)
    return body + 1.0 / alpha - osc, e1 + e2


def _tau_moment(tau_moment, delta):
    if tau_moment == "tail":
        return float(gamma_fn(1.0 + 5.0 / 3.0))
    if tau_moment == "alpha_delta":
        if delta is None:
            raise DegenerateInputError("tau_moment='alpha_delta' needs delta")
        return float(gamma_fn(1.0 + alpha_of(delta)))
    raise DegenerateInputError(f"unknown tau_moment {tau_moment!r}")


# log-tau panels for the Exp(1) average at the critical scaling
_TAU_NODES, _TAU_WEIGHTS = gl_panels(-42.0, 4.5, 186, 16)
# log-s panels for the reduced exponent at the critical scaling
_S_NODES, _S_WEIGHTS = gl_panels(-60.0, 60.0, 240, 16)


@dataclass
class LevyMeasureSpec:
    """Symmetric Lévy measure of one of the three regimes.

    For power-law regimes ``density(r) = prefactor * |r|^{-1-alpha_tail}``.
    At the critical scaling the density is ``jump_scale * E[tau^{-1}
    G(2 pi r / tau)]`` with ``G`` the branch-summed density at
    ``field_argument``.
    """

    regime: str
    B: float
    gamma: float
    normalization: str = "model"
    tau_moment: str = "tail"
    delta: Optional[float] = None
    alpha_tail: Optional[float] = None
    prefactor: Optional[float] = None
    jump_scale: Optional[float] = None
    field_argument: Optional[float] = None

    def density(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r == 0):
            raise DegenerateInputError("Lévy density is singular at r=0")
        if self.regime != EQ_HALF:
            out = self.prefactor * np.abs(r) ** (-1.0 - self.alpha_tail)
            return float(out) if np.ndim(out) == 0 else out
        a = np.abs(np.ravel(r))
        tau = np.exp(_TAU_NODES)
        # tau^{-1} d tau = d(log tau)
        arg = 2.0 * np.pi * a[:, None] / tau[None, :]
        G = density_G(self.field_argument, self.gamma, arg)
        vals = self.jump_scale * (G * np.exp(-tau)[None, :]) @ _TAU_WEIGHTS
        return float(vals[0]) if np.ndim(r) == 0 else vals.reshape(r.shape)

    def small_jump_integral(self):
        """``integral min(1, r^2) d nu`` over the real line, with error."""
        if self.regime != EQ_HALF:
            a = self.alpha_tail
            f = lambda r: self.prefactor * r ** (1.0 - a)
            body, e1 = quad(f, 0.0, 1.0, abs_tol=1e-12, rel_tol=1e-12)
            tail, e2 = quad(lambda r: self.prefactor * r ** (-1.0 - a), 1.0, np.inf,
                            abs_tol=1e-12, rel_tol=1e-12)
            return 2.0 * (body + tail), 2.0 * (e1 + e2)
        body, e1 = quad(lambda r: r * r * self.density(r), 0.0, 1.0,
                        abs_tol=1e-10, rel_tol=1e-10)
        y_max = np.log(1e8)
        mid, e2 = quad(lambda y: self.density(np.exp(y)) * np.exp(y), 0.0, y_max,
                       abs_tol=1e-10, rel_tol=1e-10, limit=200)
        r_c = np.exp(y_max)
        # closure with the asymptotic r^{-8/3} law fitted at the cutoff
        closure = self.density(r_c) * r_c / (5.0 / 3.0)
        total = body + mid + closure
        if closure > 1e-8 * total:
            raise QuadratureError("tail closure of the Lévy measure too large")
        return 2.0 * total, 2.0 * (e1 + e2 + closure)


def levy_measure(regime, B, gamma, normalization="model", tau_moment="tail", delta=None):
    """Lévy measure of the scaled flight process in the given regime."""
    _check_common(B, gamma)
    if regime not in REGIMES:
        raise DegenerateInputError(f"unknown regime {regime!r}")
    if normalization not in NORMALIZATIONS:
        raise DegenerateInputError(f"unknown normalization {normalization!r}")
    if regime == GT_HALF:
        pref = gamma ** -0.5 * KAPPA_0 * gamma_fn(2.5)
        if normalization == "model":
            pref *= MODEL_FACTOR_GT
        return LevyMeasureSpec(regime, B, gamma, normalization, tau_moment, delta,
                               alpha_tail=1.5, prefactor=float(pref))
    if regime == LT_HALF:
        if B <= 0:
            raise DegenerateInputError("the delta < 1/2 measure needs B > 0")
        pref = gamma ** (-2.0 / 3.0) * B ** (-1.0 / 3.0) * KAPPA_INF * _tau_moment(tau_moment, delta)
        if normalization == "model":
            pref *= MODEL_FACTOR_LT
        return LevyMeasureSpec(regime, B, gamma, normalization, tau_moment, delta,
                               alpha_tail=5.0 / 3.0, prefactor=float(pref))
    if normalization == "model":
        scale, arg = 2.0 * gamma * 2.0 * np.pi * 8.0, 0.5 * B
    else:
        scale, arg = 2.0 * gamma, float(B)
    return LevyMeasureSpec(regime, B, gamma, normalization, tau_moment, delta,
                           jump_scale=float(scale), field_argument=float(arg))


@dataclass
class LevyExponent:
    """Lévy exponent ``Phi(theta) = 2 int_0^inf (cos(theta r) - 1) nu(r) dr``."""

    spec: LevyMeasureSpec
    closed_form: bool
    coefficient: Optional[float] = None
    _s_cache: Optional[np.ndarray] = field(default=None, repr=False)

    def _half_nodes(self):
        if self._s_cache is None:
            s = np.exp(_S_NODES)
            G = density_G(self.spec.field_argument, self.spec.gamma, s)
            # ds = s d(log s); Phi = -(jump_scale/pi) int G a^2/(1+a^2) ds
            self._s_cache = _S_WEIGHTS * G * s * (self.spec.jump_scale / np.pi)
        return self._s_cache

    def __call__(self, theta):
        return self.evaluate(theta)

    def evaluate(self, theta):
        th = np.asarray(theta, dtype=float)
        if self.closed_form:
            out = -self.coefficient * np.abs(th) ** self.spec.alpha_tail
            return float(out) if np.ndim(out) == 0 else out
        w = self._half_nodes()
        s = np.exp(_S_NODES)
        flat = np.abs(np.ravel(th))
        out = np.empty(flat.shape)
        for start in range(0, flat.size, 512):
            blk = flat[start:start + 512]
            a2 = (blk[:, None] * s[None, :] / (2.0 * np.pi)) ** 2
            out[start:start + 512] = -(a2 / (1.0 + a2)) @ w
        return float(out[0]) if np.ndim(th) == 0 else out.reshape(th.shape)

    def quadrature(self, theta):
        """Direct quadrature of the cosine form against the measure density."""
        th = abs(float(theta))
        if th == 0.0:
            return 0.0
        dens = self.spec.density
        if self.spec.regime == EQ_HALF:
            tol = dict(abs_tol=1e-11, rel_tol=1e-10)
        else:
            tol = dict(abs_tol=1e-14, rel_tol=1e-11)
        body, _ = quad(lambda u: -2.0 * np.sin(0.5 * u) ** 2 * dens(u / th) / th,
                       0.0, 1.0, **tol)
        osc, _ = quad(lambda u: dens(u / th) / th, 1.0, np.inf,
                      weight="cos", wvar=1.0, **tol)
        if self.spec.regime == EQ_HALF:
            mass, _ = quad(lambda y: dens(np.exp(y) / th) * np.exp(y) / th,
                           0.0, 60.0, **tol)
        else:
            mass = self.spec.prefactor * th ** self.spec.alpha_tail / self.spec.alpha_tail
        return 2.0 * (body + osc - mass)


def levy_exponent(spec):
    """Exponent associated with a measure; closed form for power laws."""
    if spec.regime == EQ_HALF:
        return LevyExponent(spec, closed_form=False)
    coeff = spec.prefactor * 2.0 * stable_integral_exact(spec.alpha_tail)
    return LevyExponent(spec, closed_form=True, coefficient=float(coeff))


@dataclass(frozen=True)
class LimitConstants:
    """Diffusion constants of the zero- and infinite-field fractional equations.

    ``D_0`` and ``D_inf`` are the published integrals; ``coeff_0`` and
    ``coeff_inf`` multiply ``|p|^{3/2}`` and ``|p|^{5/3}`` in the exponents
    of the limiting equations under the chosen normalization.
    """

    D_0: float
    D_inf: float
    err_0: float
    err_inf: float
    coeff_0: float
    coeff_inf: float
    normalization: str


def limit_constants(gamma, normalization="model"):
    """Limit constants with quadrature error estimates."""
    if not gamma > 0:
        raise DegenerateInputError(f"gamma must be > 0, got {gamma}")
    i0, e0 = stable_integral(1.5)
    i1, e1 = stable_integral(5.0 / 3.0)
    D_0 = 2.0 * KAPPA_0 * i0
    D_inf = 2.0 * KAPPA_INF * i1
    c0 = gamma_fn(2.5) * gamma ** -0.5 * D_0
    c1 = gamma_fn(1.0 + 5.0 / 3.0) * gamma ** (-2.0 / 3.0) * D_inf
    if normalization == "model":
        c0 *= MODEL_FACTOR_GT
        c1 *= MODEL_FACTOR_LT
    elif normalization != "paper":
        raise DegenerateInputError(f"unknown normalization {normalization!r}")
    return LimitConstants(float(D_0), float(D_inf), 2 * KAPPA_0 * e0,
                          2 * KAPPA_INF * e1, float(c0), float(c1), normalization)


def interpolation_generator_apply(B, gamma, profile_ft, freqs, regime=EQ_HALF,
                                  normalization="model"):
    """Apply the limiting generator as a Fourier multiplier.

    ``freqs`` are ordinary frequencies ``xi``; the symbol is ``Phi(2 pi xi)``.
    """
    exp = levy_exponent(levy_measure(regime, B, gamma, normalization))
    return np.asarray(profile_ft) * exp.evaluate(2.0 * np.pi * np.asarray(freqs, dtype=float))


def exponent_table(exponent, thetas):
    """Rows ``(theta, phi, regime, B, gamma)`` for CSV export."""
    phi = exponent.evaluate(np.asarray(thetas, dtype=float))
    return [(float(t), float(p), exponent.spec.regime, exponent.spec.B, exponent.spec.gamma)
            for t, p in zip(np.ravel(thetas), np.ravel(phi))]
