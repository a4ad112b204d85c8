"""The pure-jump process on the torus times two branches.

After the first jump the chain is i.i.d. with law ``pi_B``; each sojourn lasts
``lambda_B(X_n) * tau_n`` with ``tau_n ~ Exp(1)``. This module offers the exact
jump-by-jump simulator together with quadrature versions of the generator and
the collision operator.
"""

from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from . import spectral as sp
from .errors import InsufficientTrajectoryError, SingularityError
from .quadrature import quad
from .spectral import ModeState


def sample_pi_many(params, rng, size):
    """Draw ``size`` modes from ``pi_B``; returns arrays ``(k, i)``.

    Rejection from the uniform law on the torus with acceptance
    ``sin^2(pi k)``, then branch ``1`` with probability ``theta_1^2(k)``.
    """
    rng = np.random.default_rng(rng)
    ks = np.empty(0)
    while ks.size < size:
        need = size - ks.size
        n = int(need * 2.2) + 16
        k = rng.random(n) - 0.5
        acc = rng.random(n) < np.sin(np.pi * k) ** 2
        k = k[acc & (k != 0.0)]
        ks = np.concatenate([ks, k[:need]])
    t1 = sp.theta_sq(params, ks, 1)
    br = np.where(rng.random(size) < t1, 1, 2)
    return ks, br


def sample_pi(params, rng):
    """One draw from the invariant measure as a :class:`ModeState`."""
    k, i = sample_pi_many(params, rng, 1)
    return ModeState(float(k[0]), int(i[0]))


def step_chain(params, current, rng):
    """Next state of the embedded chain; independent of ``current``."""
    return sample_pi(params, rng)


@numba.njit(cache=True)
def compensated_cumsum(x):
    """Cumulative sum with Neumaier compensation."""
    out = np.empty(x.shape[0])
    s = 0.0
    c = 0.0
    for n in range(x.shape[0]):
        t = s + x[n]
        if abs(s) >= abs(x[n]):
            c += (s - t) + x[n]
        else:
            c += (x[n] - t) + s
        s = t
        out[n] = s + c
    return out


@dataclass
class Trajectory:
    """Jump record ``X_0, X_1, ...`` with holding times and cumulative clock.

    ``clock[n]`` is the end of sojourn ``n``.
    """

    k: np.ndarray
    i: np.ndarray
    holdings: np.ndarray
    clock: np.ndarray
    rng_seed: Optional[int] = None
    _states: Optional[list] = field(default=None, repr=False)

    @property
    def states(self):
        if self._states is None:
            self._states = [ModeState(float(a), int(b)) for a, b in zip(self.k, self.i)]
        return self._states

    def __len__(self):
        return self.holdings.size


def simulate_trajectory(params, x0, n_jumps, rng):
    """Simulate ``n_jumps`` jumps from ``x0``; ``n_jumps + 1`` sojourns in total."""
    if x0.k == 0.0:
        raise SingularityError("start state must have k != 0")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = np.random.default_rng(rng)
    k, i = sample_pi_many(params, rng, int(n_jumps))
    k = np.concatenate([[x0.k], k])
    i = np.concatenate([[x0.i], i])
    # inverse CDF of Exp(1) on (0, 1]
    tau = -np.log1p(-rng.random(k.size))
    tau = np.where(tau > 0, tau, np.finfo(float).tiny)
    hold = sp.lambda_holding(params, k, i) * tau
    return Trajectory(k, i, hold, compensated_cumsum(hold), seed)


def flight_integral(params, traj, u, t, prefactor=1.0 / (2.0 * np.pi)):
    """``u - prefactor * integral_0^t v(K(s)) ds`` along the trajectory."""
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    if t == 0:
        return float(u)
    if traj.clock[-1] < t:
        raise InsufficientTrajectoryError(
            f"trajectory covers {traj.clock[-1]:.6g} < {t:.6g}")
    j = int(np.searchsorted(traj.clock, t, side="left"))
    v = sp.group_velocity(params, traj.k[:j + 1])
    v = np.atleast_1d(v)
    start = traj.clock[j - 1] if j > 0 else 0.0
    done = float(np.dot(v[:j], traj.holdings[:j])) if j > 0 else 0.0
    return float(u - prefactor * (done + v[j] * (t - start)))


def clock_inverse(params, traj, t, N, alpha):
    """Rescaled jump count ``S_N(t)``.

    ``S_N(t) = #{n : clock[n] <= N^alpha t} / N^alpha``, which equals
    ``j_N + 1`` sojourns completed in ``[0, N^alpha t]`` (zero at ``t = 0``).
    """
    scale = float(N) ** alpha
    T = scale * t
    if traj.clock[-1] <= T:
        raise InsufficientTrajectoryError(
            f"trajectory covers {traj.clock[-1]:.6g} <= {T:.6g}")
    return int(np.searchsorted(traj.clock, T, side="right")) / scale


def _kernel_integral(params, state, g, abs_tol):
    """``sum_j int P(k, i, dk', j) g(k', j)`` from the kernel formula."""
    k, i = state.k, state.i
    lam = sp.lambda_holding(params, k, i)
    th_i = sp.theta_sq(params, k, i)
    total = 0.0
    for j in (1, 2):
        def integrand(kp, j=j):
            return (params.gamma * lam * th_i * sp.scattering_R(k, kp)
                    * sp.theta_sq(params, kp, j) * g(kp, j))
        val, _ = quad(integrand, -0.5, 0.5, abs_tol=abs_tol, rel_tol=1e-12,
                      points=[0.0])
        total += val
    return total


def apply_generator(params, f, state, abs_tol=1e-10):
    """``L_B[f](k, i)`` by quadrature of the transition kernel."""
    if state.k == 0.0:
        raise SingularityError("generator evaluated at k=0")
    fk = f(state.k, state.i)
    integ = _kernel_integral(params, state, lambda kp, j: f(kp, j) - fk, abs_tol)
    return integ / sp.lambda_holding(params, state.k, state.i)


def generator_reduced(params, f, state, abs_tol=1e-10):
    """``(<f>_pi - f(k, i)) / lambda(k, i)``, the reduced generator form."""
    mean = 0.0
    for j in (1, 2):
        val, _ = quad(lambda kp: sp.pi_density(params, kp, j) * f(kp, j), -0.5, 0.5,
                      abs_tol=abs_tol, rel_tol=1e-12, points=[0.0])
        mean += val
    return (mean - f(state.k, state.i)) / sp.lambda_holding(params, state.k, state.i)


def apply_collision(params, J, u, k, i, abs_tol=1e-10):
    """``[C_B J]_i(u, k)`` for a pair ``J = (J_1, J_2)`` of functions of ``(u, k)``."""
    th_i = sp.theta_sq(params, k, i) if (k != 0 or params.B_eff > 0) else 0.5
    base = J[i - 1](u, k)
    total = 0.0
    for j in (1, 2):
        def integrand(kp, j=j):
            return (th_i * sp.scattering_R(k, kp) * sp.theta_sq(params, kp, j)
                    * (J[j - 1](u, kp) - base))
        val, _ = quad(integrand, -0.5, 0.5, abs_tol=abs_tol, rel_tol=1e-12,
                      points=[0.0])
        total += val
    return total
