"""Quadrature helpers for complex, vector valued integrands."""
from functools import lru_cache

import numpy as np
from scipy.integrate import quad_vec

from .errors import QuadratureNoConverge
from .tolerances import QUAD_LIMIT, QUAD_TOL


@lru_cache(maxsize=32)
def gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def adaptive(f, a, b, epsabs=QUAD_TOL, limit=QUAD_LIMIT):
    """Adaptive Gauss-Kronrod integral of a complex vector valued ``f``.

    ``f`` maps a scalar parameter to a 1-D complex array.  Raises
    QuadratureNoConverge when the panel budget is exhausted before the
    absolute error estimate drops below ``epsabs``.
    """
    if a == b:
        return np.zeros_like(np.asarray(f(a), dtype=complex))
    res, err, info = quad_vec(f, a, b, epsabs=epsabs, epsrel=0.0, norm="max",
                              limit=limit, full_output=True)
    if info.status != 0 or not np.all(np.isfinite(res)):
        raise QuadratureNoConverge(
            "adaptive quadrature did not reach tolerance",
            error_estimate=float(err), panels=int(info.intervals.shape[0]))
    return np.asarray(res, dtype=complex)


def fixed(f, a, b, n=24):
    """n-point Gauss-Legendre rule, ``f`` vectorised over its argument.

    ``f(t)`` returns an array whose last axis runs over the nodes.
    """
    x, w = gauss_legendre(n)
    t = a + (b - a) * x
    return (b - a) * np.sum(f(t) * w, axis=-1)
