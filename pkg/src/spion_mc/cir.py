"""Analytic channel impulse response of the flow-driven link.

Particles are released at z = -d with a Beta-distributed squared radial
position s = rho^2 / a^2 and advected by the parabolic profile
u(s) = u0 (1 - s). A transparent receiver averages the concentration over a
rectangular axial window of length ``lz`` centered at z = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import ConfigError, NumericError
from .params import TestbedConfig, max_velocity, scale_factor
from .special import beta_norm, betainc, log_beta

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BetaInit:
    alpha: float = 3.0
    beta: float = 3.0

    def __post_init__(self):
        if not (self.alpha >= 1.0 and self.beta >= 1.0):
            raise ConfigError(f"Beta shapes must be >= 1, got ({self.alpha}, {self.beta})")


@dataclass(frozen=True)
class CirModel:
    cfg: TestbedConfig = field(default_factory=TestbedConfig)
    d: float | None = None
    init: BetaInit = field(default_factory=BetaInit)
    lz: float = 0.0  # receiver window length; 0 selects the thin-receiver limit

    def __post_init__(self):
        if self.d is None:
            object.__setattr__(self, "d", self.cfg.d)
        if self.d <= 0:
            raise ConfigError(f"distance must be positive, got {self.d}")
        if self.lz < 0:
            raise ConfigError("window length must be nonnegative")
        if self.lz > 0 and self.d - self.lz / 2 <= 0:
            raise ConfigError("receiver window reaches back past the transmitter")
        if max_velocity(self.cfg) <= 0:
            raise ConfigError("CIR needs a nonzero background flow")

    @property
    def u0(self) -> float:
        return max_velocity(self.cfg)

    @property
    def c_d(self) -> float:
        return scale_factor(self.cfg, self.d)

    def with_init(self, alpha: float, beta: float) -> "CirModel":
        return CirModel(self.cfg, self.d, BetaInit(alpha, beta), self.lz)

    def __call__(self, t):
        return cir(self, t)


def f_s(init: BetaInit, s):
    """Beta density of the squared normalized radius; zero outside [0, 1]."""
    s = np.asarray(s, dtype=float)
    inside = (s >= 0) & (s <= 1)
    sc = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = sc ** (init.alpha - 1.0) * (1.0 - sc) ** (init.beta - 1.0)
    out = np.where(inside, val / beta_norm(init.alpha, init.beta), 0.0)
    return out[()] if out.ndim == 0 else out


def f_rho(init: BetaInit, cfg: TestbedConfig, rho):
    """Radial density (per meter) over [0, a]."""
    a = cfg.a
    r = np.asarray(rho, dtype=float) / a
    inside = (r >= 0) & (r <= 1)
    rc = np.clip(r, 0.0, 1.0)
    val = rc ** (2 * init.alpha - 1.0) * (1.0 - rc**2) ** (init.beta - 1.0)
    out = np.where(inside, 2.0 * val / (a * beta_norm(init.alpha, init.beta)), 0.0)
    return out[()] if out.ndim == 0 else out


def F_s(init: BetaInit, s):
    """CDF of :func:`f_s`; the argument is clamped to [0, 1]."""
    return betainc(init.alpha, init.beta, s)


def t_start(model: CirModel) -> float:
    return model.d / model.u0


def t_peak(model: CirModel) -> float:
    a, b = model.init.alpha, model.init.beta
    return t_start(model) * (1.0 + (a - 1.0) / b)


def h_peak(model: CirModel) -> float:
    a, b = model.init.alpha, model.init.beta
    # Python's 0.0 ** 0.0 == 1.0 covers the alpha = 1 jump peak.
    log_shape = b * math.log(b) - (a + b - 1.0) * math.log(a + b - 1.0)
    if a > 1.0:
        log_shape += (a - 1.0) * math.log(a - 1.0)
    return model.c_d * math.exp(log_shape - log_beta(a, b))


def limit_shape(x, alpha: float, beta: float):
    """h / c_d for the thin receiver as a function of x = t0 / t in [0, 1]."""
    x = np.asarray(x, dtype=float)
    return (1.0 - x) ** (alpha - 1.0) * x**beta / beta_norm(alpha, beta)


def cir_limit(model: CirModel, t):
    """Thin-receiver CIR; zero before t0, with a jump at t0 when alpha = 1."""
    t = np.asarray(t, dtype=float)
    t0 = t_start(model)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = np.where(t > 0, t0 / np.where(t > 0, t, 1.0), np.inf)
    on = x <= 1.0 + 1e-12
    xc = np.clip(np.where(on, x, 0.0), 0.0, 1.0)
    h = np.where(on, model.c_d * limit_shape(xc, model.init.alpha, model.init.beta), 0.0)
    return h[()] if h.ndim == 0 else h


def cir_windowed(model: CirModel, t, lz: float | None = None):
    """CIR of a receiver averaging over an axial window of length ``lz``."""
    lz = model.lz if lz is None else lz
    if lz <= 0:
        raise ConfigError("windowed CIR needs lz > 0; use cir_limit for lz = 0")
    d, u0 = model.d, model.u0
    t = np.asarray(t, dtype=float)
    pos = t > 0
    ut = u0 * np.where(pos, t, 1.0)
    near = F_s(model.init, 1.0 - (d - lz / 2) / ut)
    far = F_s(model.init, 1.0 - (d + lz / 2) / ut)
    h = np.where(pos, model.c_d * d / lz * np.maximum(near - far, 0.0), 0.0)
    return h[()] if h.ndim == 0 else h


def cir(model: CirModel, t):
    """Dispatch on the model's window length."""
    if model.lz > 0:
        return cir_windowed(model, t)
    return cir_limit(model, t)


def sample_cir(model: CirModel, n: int, dt: float, offset: float | None = None) -> np.ndarray:
    """``n`` samples of the CIR at ``offset + i dt``; offset defaults to t0."""
    offset = t_start(model) if offset is None else offset
    return np.asarray(cir(model, offset + dt * np.arange(n)), dtype=float)


def cir_numeric_oracle(
    model: CirModel,
    t: float,
    lz: float | None = None,
    mode: str = "sifted",
    rtol: float = 1e-10,
    max_subintervals: int = 200,
    grid: tuple[int, int] = (20000, 64),
    smoothing: float = 1e-3,
) -> float:
    """Evaluate the windowed CIR by direct numerical integration.

    ``mode="sifted"`` integrates the axial window after the release delta has
    been resolved against the radial coordinate, leaving
    ``(c_d d / lz) / (u0 t) * integral of f_s(1 - (z + d)/(u0 t)) dz`` over the
    window; adaptive quadrature is run over the part of the window where the
    integrand's support lies.

    ``mode="smoothed"`` keeps both coordinates: it integrates
    ``f_s(s) * delta(z - u0 (1 - s) t + d)`` over s in [0, 1] and z in the
    window on a ``grid = (n_s, n_z)`` tensor rule, with the delta replaced by
    a Gaussian of standard deviation ``smoothing`` in units of s. Its error
    is dominated by the smoothing (second order in ``smoothing``), so use it
    as a coarse independent cross-check.
    """
    lz = model.lz if lz is None else lz
    if lz <= 0:
        raise ConfigError("numeric oracle needs lz > 0")
    if t <= 0:
        return 0.0
    d, u0 = model.d, model.u0
    ut = u0 * t
    pref = model.c_d * d / lz / ut
    if mode == "sifted":
        lo = max(-lz / 2, -d)
        hi = min(lz / 2, ut - d)
        if hi <= lo:
            return 0.0
        val, err, *info = integrate.quad(
            lambda z: float(f_s(model.init, 1.0 - (z + d) / ut)),
            lo,
            hi,
            epsabs=0.0,
            epsrel=rtol,
            limit=max_subintervals,
            full_output=1,
        )
        if len(info) >= 2 and info[0].get("last", 0) >= max_subintervals:
            raise NumericError(f"quadrature did not reach rtol={rtol} at t={t}")
        if err > max(rtol * abs(val), 1e-300) * 10:
            raise NumericError(f"quadrature error {err:.3g} exceeds tolerance at t={t}")
        return pref * val
    if mode == "smoothed":
        n_s, n_z = grid
        s = (np.arange(n_s) + 0.5) / n_s
        ws = 1.0 / n_s
        fs = f_s(model.init, s)
        zg, wz = np.polynomial.legendre.leggauss(n_z)
        z = zg * lz / 2
        wz = wz * lz / 2
        sig = smoothing * ut  # Gaussian width in the delta's (axial) units
        total = 0.0
        for k in range(0, n_z, 8):
            phi = z[k : k + 8, None] - ut * (1.0 - s[None, :]) + d
            kern = np.exp(-0.5 * (phi / sig) ** 2) / (sig * math.sqrt(2 * math.pi))
            total += float(wz[k : k + 8] @ (kern @ (fs * ws)))
        # pref carries 1/(u0 t); the raw (s, z) form has no such factor.
        return pref * ut * total
    raise ValueError(f"unknown oracle mode {mode!r}")


def golden_section_max(fn, lo: float, hi: float, tol: float) -> float:
    """Maximizer of a unimodal function on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = fn(c), fn(e)
    while b - a > tol:
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = fn(e)
    return 0.5 * (a + b)


def numeric_peak(model: CirModel, span: float = 10.0, n_grid: int = 2000) -> float:
    """Locate the CIR maximum by coarse gridding plus golden-section refinement."""
    t0 = t_start(model)
    lo = t0 * (1.0 - 0.5 * model.lz / model.d) if model.lz > 0 else t0
    grid = np.linspace(lo, span * t0, n_grid)
    vals = cir(model, grid)
    i = int(np.argmax(vals))
    if i == 0:
        return float(grid[0])
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_grid - 1)]
    return golden_section_max(lambda x: float(cir(model, x)), a, b, 1e-6 * t0)
