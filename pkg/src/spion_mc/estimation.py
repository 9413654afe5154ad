"""Channel estimation from a known training prefix.

Two estimators share the PAM signal model: a parametric fit of the analytic
CIR (shapes alpha, beta and gain gamma) and a direct least-squares fit of all
CIR taps.
"""

from __future__ import annotations

import enum
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg, optimize

from .cir import CirModel, limit_shape, t_start
from .errors import ConfigError, NumericError
from .params import TestbedConfig
from .signal import RegularSignal, SymbolSequence, pam_values

SHAPE_BOUNDS = (1.0, 10.0)
START_GRID = (1.0, 2.0, 3.0, 4.0, 6.0)


class Method(str, enum.Enum):
    MODEL = "model"
    SAMPLES = "samples"


@dataclass(frozen=True)
class ChannelEstimate:
    h: np.ndarray
    method: Method
    fitted: tuple[float, float, float] | None = None  # (alpha, beta, gamma)
    residual: float = 0.0  # training sum of squared errors
    N: int | None = None
    I: int | None = None

    def to_dict(self) -> dict:
        out = {
            "method": self.method.value,
            "h": self.h.tolist(),
            "residual": self.residual,
            "N": self.N,
            "I": self.I,
        }
        if self.fitted is not None:
            out["fitted"] = dict(zip(("alpha", "beta", "gamma"), self.fitted))
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelEstimate":
        fitted = data.get("fitted")
        if fitted is not None:
            fitted = (fitted["alpha"], fitted["beta"], fitted["gamma"])
        return cls(
            h=np.asarray(data["h"], dtype=float),
            method=Method(data["method"]),
            fitted=fitted,
            residual=float(data.get("residual", 0.0)),
            N=data.get("N"),
            I=data.get("I"),
        )

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    @classmethod
    def load(cls, path: str | Path) -> "ChannelEstimate":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _bits(at) -> np.ndarray:
    if isinstance(at, SymbolSequence):
        return at.bits
    return np.asarray(at, dtype=np.int8).ravel()


def _training(rt, at, I: int) -> tuple[np.ndarray, np.ndarray]:
    bits = _bits(at)
    r = rt.values if isinstance(rt, RegularSignal) else np.asarray(rt, dtype=float)
    n = bits.size * I
    if bits.size == 0 or n == 0:
        raise ConfigError("empty training sequence")
    if r.size < n:
        raise ConfigError(f"training signal has {r.size} samples, need {n}")
    return r[:n], bits


def build_design(at, N: int, I: int, n_samples: int | None = None) -> np.ndarray:
    """Matrix A with (A h)[i] = sum_k a[k] h[i - k I] for the first n_samples rows."""
    bits = _bits(at)
    n_rows = bits.size * I if n_samples is None else n_samples
    A = np.zeros((n_rows, N * I))
    cols = np.arange(N * I)
    for k in np.flatnonzero(bits):
        rows = cols + k * I
        keep = rows < n_rows
        A[rows[keep], cols[keep]] += 1.0
    return A


def fit_samples(rt, at, N: int, I: int, ridge: float = 0.0) -> ChannelEstimate:
    """Least-squares CIR taps; minimum-norm when the training is not identifying."""
    if ridge < 0:
        raise ConfigError("ridge must be nonnegative")
    r, bits = _training(rt, at, I)
    A = build_design(bits, N, I)
    if ridge > 0:
        A_solve = np.vstack([A, math.sqrt(ridge) * np.eye(N * I)])
        r_solve = np.concatenate([r, np.zeros(N * I)])
    else:
        A_solve, r_solve = A, r
    # gelsy: complete orthogonal factorization with column pivoting
    h, *_ = linalg.lstsq(A_solve, r_solve, lapack_driver="gelsy")
    res = float(np.sum((r - A @ h) ** 2))
    return ChannelEstimate(h=h, method=Method.SAMPLES, residual=res, N=N, I=I)


class _ShapeObjective:
    """Training error as a function of (alpha, beta) with gamma profiled out."""

    def __init__(self, r, bits, model: CirModel, N: int, I: int):
        self.r = r
        self.bits = bits
        self.N, self.I = N, I
        self.c_d = model.c_d
        t0 = t_start(model)
        self.x = t0 / (t0 + model.cfg.dt * np.arange(N * I))
        self.A = build_design(bits, N, I)
        self.rr = float(r @ r)
        self.evals = 0

    def taps(self, alpha, beta):
        return self.c_d * limit_shape(self.x, alpha, beta)

    def solve(self, alpha, beta) -> tuple[float, float]:
        self.evals += 1
        s = self.A @ self.taps(alpha, beta)
        ss = float(s @ s)
        if ss == 0.0:
            return 0.0, self.rr
        gamma = max(float(s @ self.r) / ss, 0.0)
        return gamma, float(np.sum((self.r - gamma * s) ** 2))

    def __call__(self, p) -> float:
        lo, hi = SHAPE_BOUNDS
        alpha, beta = np.clip(p, lo, hi)
        return self.solve(alpha, beta)[1]


def fit_model(
    rt,
    at,
    cfg: TestbedConfig,
    d: float,
    N: int,
    I: int | None = None,
    starts=START_GRID,
    xatol: float = 1e-8,
    max_evals: int = 5000,
) -> ChannelEstimate:
    """Fit (alpha, beta, gamma) of the thin-receiver CIR to training data.

    The gain enters linearly and is solved in closed form for every shape
    pair, so the search runs over (alpha, beta) in [1, 10]^2: a Nelder-Mead
    descent from each point of ``starts x starts``, keeping the best result
    (ties go to the lexicographically smaller shape pair).
    """
    I = cfg.oversampling if I is None else I
    r, bits = _training(rt, at, I)
    if not bits.any():
        raise ConfigError("training sequence carries no pulses; nothing to fit")
    model = CirModel(cfg, d)
    obj = _ShapeObjective(r, bits, model, N, I)
    lo, hi = SHAPE_BOUNDS
    # simplex spread in the objective below rounding level of ||r||^2
    fatol = 1e-14 * obj.rr
    best = None
    for a0, b0 in itertools.product(starts, starts):
        f0 = obj((a0, b0))
        res = optimize.minimize(
            obj,
            x0=np.array([a0, b0], dtype=float),
            method="Nelder-Mead",
            bounds=[SHAPE_BOUNDS, SHAPE_BOUNDS],
            options={"xatol": xatol, "fatol": fatol, "maxfev": max_evals},
        )
        p = np.clip(res.x, lo, hi)
        f = obj(p)
        if f0 < f:  # never return worse than the starting point
            p, f = np.array([a0, b0], dtype=float), f0
        cand = (f, float(p[0]), float(p[1]))
        if best is None or cand < best:
            best = cand
    if best is None or not math.isfinite(best[0]):
        raise NumericError("model fit produced no finite objective")
    _, alpha, beta = best
    gamma, res = obj.solve(alpha, beta)
    h = gamma * obj.taps(alpha, beta)
    return ChannelEstimate(
        h=h, method=Method.MODEL, fitted=(alpha, beta, gamma), residual=res, N=N, I=I
    )


def predicted(est: ChannelEstimate, bits, I: int, n: int) -> np.ndarray:
    """PAM signal implied by an estimate for a bit sequence, first ``n`` samples."""
    return pam_values(_bits(bits), est.h, I, n)
