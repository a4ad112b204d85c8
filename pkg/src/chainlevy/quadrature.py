"""Quadrature helpers.

Adaptive integration is delegated to QUADPACK through ``scipy.integrate.quad``;
this module only enforces the error contract (a failed estimate raises) and
provides fixed Gauss-Legendre panels for vectorized log-scale integrals.
"""

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import QuadratureError

DEFAULT_ABS_TOL = 1e-10
DEFAULT_REL_TOL = 1e-10


def quad(func, a, b, abs_tol=DEFAULT_ABS_TOL, rel_tol=DEFAULT_REL_TOL,
         limit=500, points=None, weight=None, wvar=None, check=True):
    """Adaptive Gauss-Kronrod integral of ``func`` over ``[a, b]``.

    Returns ``(value, error_estimate)``. Raises :class:`QuadratureError` when
    QUADPACK reports a problem or when the error estimate exceeds
    ``max(abs_tol, rel_tol * |value|)``.
    """
    kwargs = dict(epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1)
    if points is not None:
        kwargs["points"] = points
    if weight is not None:
        kwargs["weight"] = weight
        kwargs["wvar"] = wvar
        if np.isinf(b):
            kwargs.pop("limit")
            kwargs["limlst"] = 200
            kwargs["limit"] = limit
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, **kwargs)
    value, err = out[0], out[1]
    if not np.isfinite(value):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]")
    if check and err > max(abs_tol, rel_tol * abs(value)):
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} exceeds tolerance "
            f"(value {value:.6e}) on [{a}, {b}]")
    return value, err


@lru_cache(maxsize=32)
def _gauss_legendre(order):
    return np.polynomial.legendre.leggauss(order)


def gl_panels(a, b, n_panels, order=16):
    """Nodes and weights of a composite Gauss-Legendre rule on ``[a, b]``."""
    x, w = _gauss_legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
