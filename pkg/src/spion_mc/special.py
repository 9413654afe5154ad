"""Beta function and regularized incomplete beta function.

The incomplete beta is evaluated with the modified Lentz algorithm on the
standard continued fraction, vectorized over the argument.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 500


def log_beta(alpha: float, beta: float) -> float:
    if alpha <= 0 or beta <= 0:
        raise ValueError("Beta function needs positive shape parameters")
    return math.lgamma(alpha) + math.lgamma(beta) - math.lgamma(alpha + beta)


def beta_norm(alpha: float, beta: float) -> float:
    """B(alpha, beta) = Gamma(alpha) Gamma(beta) / Gamma(alpha + beta)."""
    return math.exp(log_beta(alpha, beta))


def _betacf(a: float, b: float, x: np.ndarray) -> np.ndarray:
    # Continued fraction for I_x(a, b); converges fast for x < (a+1)/(a+b+2).
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _EPS
        if done.all():
            return h
    raise NumericError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def betainc(alpha: float, beta: float, x):
    """Regularized incomplete beta I_x(alpha, beta), x clamped to [0, 1]."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("incomplete beta needs positive shape parameters")
    xa = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    out = np.zeros_like(xa)
    out[xa >= 1.0] = 1.0
    inner = (xa > 0.0) & (xa < 1.0)
    if inner.any():
        xi = xa[inner]
        lbeta = log_beta(alpha, beta)
        front = np.exp(alpha * np.log(xi) + beta * np.log1p(-xi) - lbeta)
        direct = xi < (alpha + 1.0) / (alpha + beta + 2.0)
        res = np.empty_like(xi)
        if direct.any():
            xd = xi[direct]
            res[direct] = front[direct] * _betacf(alpha, beta, xd) / alpha
        if (~direct).any():
            xr = xi[~direct]
            res[~direct] = 1.0 - front[~direct] * _betacf(beta, alpha, 1.0 - xr) / beta
        out[inner] = np.clip(res, 0.0, 1.0)
    return float(out[0]) if scalar else out
