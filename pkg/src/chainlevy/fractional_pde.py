"""Fourier-multiplier solver for the limiting fractional equations.

A profile lives on the periodic grid ``u_j = -L + j du`` of ``[-L, L)``.
Evolution multiplies the discrete Fourier coefficients at the ordinary
frequency ``xi`` by ``exp(t Phi(2 pi xi))``; the ``2 pi xi`` convention is the
one under which ``-(-Delta)^{a/2}`` has symbol ``-|2 pi xi|^a``.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import levy_calculus as lc
from .errors import DegenerateInputError, GridMismatchError


@dataclass(frozen=True)
class GridProfile:
    """Real profile on a uniform periodic grid of ``[-L, L)``."""

    L: float
    values: np.ndarray

    def __post_init__(self):
        n = self.values.size
        if n < 2 or n & (n - 1):
            raise DegenerateInputError("n_points must be a power of two")

    @property
    def n(self):
        return self.values.size

    @property
    def du(self):
        return 2.0 * self.L / self.n

    @property
    def u(self):
        return -self.L + self.du * np.arange(self.n)

    @property
    def xi(self):
        """Ordinary frequencies of the real FFT."""
        return np.fft.rfftfreq(self.n, d=self.du)

    def fourier(self):
        """``int rho(u) exp(-2 pi i xi u) du`` on the grid (rfft frequencies)."""
        phase = np.exp(2j * np.pi * self.xi * self.L)
        return self.du * phase * np.fft.rfft(self.values)

    def mass(self):
        return float(self.du * np.sum(self.values))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("u", "rho"))
        for a, b in zip(self.u, self.values):
            w.writerow((repr(float(a)), repr(float(b))))
        return buf.getvalue()

    def fourier_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("xi", "re", "im"))
        for a, z in zip(self.xi, self.fourier()):
            w.writerow((repr(float(a)), repr(float(z.real)), repr(float(z.imag))))
        return buf.getvalue()


def mollifier(u, lam=1.0, radius=1.0):
    """``exp(-lam / (radius^2 - u^2))`` inside ``(-radius, radius)``, zero outside."""
    if lam <= 0 or radius <= 0:
        raise DegenerateInputError("mollifier needs lam > 0 and radius > 0")
    u = np.asarray(u, dtype=float)
    inside = np.abs(u) < radius
    den = np.where(inside, radius ** 2 - u ** 2, 1.0)
    out = np.where(inside, np.exp(-lam / den), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def init_profile(kind, L=64.0, n_points=2 ** 14, lam=1.0, radius=1.0, sigma=1.0,
                 amplitude=1.0):
    """Initial profile: ``"mollifier"`` (compact support) or ``"gaussian"``."""
    if L <= 0:
        raise DegenerateInputError("L must be positive")
    u = -L + (2.0 * L / n_points) * np.arange(n_points)
    if kind == "mollifier":
        vals = mollifier(u, lam, radius)
    elif kind == "gaussian":
        if sigma <= 0:
            raise DegenerateInputError("sigma must be positive")
        vals = np.exp(-0.5 * (u / sigma) ** 2) / (sigma * np.sqrt(2.0 * np.pi))
    else:
        raise DegenerateInputError(f"unknown profile kind {kind!r}")
    return GridProfile(float(L), amplitude * vals)


def symbol(exponent, profile):
    """``Phi(2 pi xi)`` on the profile's rfft frequencies."""
    p = 2.0 * np.pi * profile.xi
    if hasattr(exponent, "evaluate"):
        return exponent.evaluate(p)
    return np.asarray(exponent(p), dtype=float)


def evolve(profile, exponent, t, phi=None):
    """Profile at time ``t`` under the multiplier ``exp(t Phi)``.

    ``phi`` may carry precomputed symbol values to avoid re-evaluation.
    """
    if t < 0:
        raise DegenerateInputError("time must be nonnegative")
    if t == 0:
        return GridProfile(profile.L, profile.values.copy())
    if phi is None:
        phi = symbol(exponent, profile)
    coef = np.fft.rfft(profile.values) * np.exp(t * phi)
    return GridProfile(profile.L, np.fft.irfft(coef, n=profile.n))


def _check_same(a, b):
    if a.n != b.n or a.L != b.L:
        raise GridMismatchError("profiles live on different grids")


def l2_distance(a, b, domain="physical"):
    """Discrete L2 distance; ``domain="fourier"`` uses Parseval."""
    _check_same(a, b)
    diff = a.values - b.values
    if domain == "physical":
        return float(np.sqrt(a.du * np.sum(diff * diff)))
    if domain == "fourier":
        c = np.fft.fft(diff)
        return float(np.sqrt(a.du / a.n * np.sum(np.abs(c) ** 2)))
    raise DegenerateInputError(f"unknown domain {domain!r}")


def l1_distance(a, b):
    """Discrete L1 distance."""
    _check_same(a, b)
    return float(a.du * np.sum(np.abs(a.values - b.values)))


def l2_norm(a):
    return float(np.sqrt(a.du * np.sum(a.values * a.values)))


def zero_field_exponent(gamma, normalization="model"):
    """Exponent of the zero-field limit equation (tail index 3/2)."""
    return lc.levy_exponent(lc.levy_measure(lc.GT_HALF, 0.0, gamma, normalization))


def infinite_field_exponent(gamma, normalization="model"):
    """Exponent of the infinite-field limit equation (tail index 5/3)."""
    return lc.levy_exponent(lc.levy_measure(lc.LT_HALF, 1.0, gamma, normalization))


def _trapezoid(y, x):
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def interpolation_limit_study(B_sequence, gamma, profile, t_grid, limit="zero",
                              normalization="model"):
    """Time-integrated distances between the critical-field solution and its limits.

    ``limit="zero"`` compares the solution at field ``B`` with the zero-field
    solution; ``limit="infinity"`` compares it at time ``B^{1/3} t`` with the
    infinite-field solution at ``t``. Both L2 and L1 distances are reported.
    """
    B_sequence = [float(b) for b in B_sequence]
    diffs = np.diff(B_sequence)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise DegenerateInputError("B_sequence must be strictly monotone")
    t_grid = np.asarray(t_grid, dtype=float)
    if limit == "zero":
        ref_exp = zero_field_exponent(gamma, normalization)
    elif limit == "infinity":
        ref_exp = infinite_field_exponent(gamma, normalization)
    else:
        raise DegenerateInputError(f"unknown limit {limit!r}")
    ref_phi = symbol(ref_exp, profile)
    refs = [evolve(profile, None, t, ref_phi) for t in t_grid]
    ref_l2 = _trapezoid([l2_norm(r) for r in refs], t_grid)
    ref_l1 = _trapezoid([r.du * np.sum(np.abs(r.values)) for r in refs], t_grid)
    rows = []
    for B in B_sequence:
        ex = lc.levy_exponent(lc.levy_measure(lc.EQ_HALF, B, gamma, normalization))
        phi = symbol(ex, profile)
        scale = B ** (1.0 / 3.0) if limit == "infinity" else 1.0
        d2, d1 = [], []
        for t, r in zip(t_grid, refs):
            cur = evolve(profile, None, scale * t, phi)
            d2.append(l2_distance(cur, r))
            d1.append(l1_distance(cur, r))
        dist2 = _trapezoid(d2, t_grid)
        dist1 = _trapezoid(d1, t_grid)
        rows.append({"B": B, "l2": dist2, "l2_rel": dist2 / ref_l2,
                     "l1": dist1, "l1_rel": dist1 / ref_l1})
    rel = [row["l2_rel"] for row in rows]
    monotone = bool(np.all(np.diff(rel) < 0))
    return {"limit": limit, "gamma": gamma, "normalization": normalization,
            "n_points": profile.n, "L": profile.L, "t_grid": [float(t) for t in t_grid],
            "reference_l2": ref_l2, "reference_l1": ref_l1, "rows": rows,
            "monotone": monotone}
