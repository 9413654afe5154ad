"""Symbol detection: sequence estimation over the PAM trellis and
increase detection, plus error counting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cir import CirModel, h_peak, t_peak, t_start
from .errors import ConfigError
from .estimation import ChannelEstimate
from .signal import RegularSignal, SymbolSequence, pam_values

# Shape pair assumed by the increase detector when deriving its parameters.
INCREASE_SHAPE = (3.0, 3.0)


@dataclass(frozen=True)
class DetectionResult:
    bits_hat: np.ndarray
    objective: float | None = None
    errors: int | None = None

    def __len__(self) -> int:
        return int(self.bits_hat.size)

    def to_dict(self) -> dict:
        return {
            "bits_hat": self.bits_hat.astype(int).tolist(),
            "objective": self.objective,
            "errors": self.errors,
        }


@dataclass(frozen=True)
class IncreaseParams:
    xi: float
    I_off: int

    def __post_init__(self):
        if not self.xi > 0:
            raise ConfigError("increase threshold must be positive")
        if self.I_off < 0:
            raise ConfigError("sample offset must be nonnegative")


def _values(r) -> np.ndarray:
    return r.values if isinstance(r, RegularSignal) else np.asarray(r, dtype=float)


def _taps(h) -> np.ndarray:
    return h.h if isinstance(h, ChannelEstimate) else np.asarray(h, dtype=float)


def _bits(a) -> np.ndarray:
    if a is None:
        return np.zeros(0, dtype=np.int8)
    return a.bits if isinstance(a, SymbolSequence) else np.asarray(a, dtype=np.int8).ravel()


def sequence_objective(r, h, bits, I: int) -> float:
    """||r - s(bits, h)||^2 over the first len(bits) * I samples."""
    n = len(bits) * I
    rv = _values(r)[:n]
    return float(np.sum((rv - pam_values(bits, h, I, n)) ** 2))


def viterbi_detect(r, h_hat, at, Ki: int, N: int, I: int) -> DetectionResult:
    """Exact least-squares sequence estimate of the Ki information bits.

    The record is cut to (Kt + Ki) I samples. Trellis states hold the last
    N - 1 symbols; the known training prefix fixes the starting state. Ties
    go to the hypothesis with the zero bit.
    """
    if Ki <= 0:
        raise ConfigError("nothing to detect: Ki must be positive")
    if N < 1 or I < 1:
        raise ConfigError("N and I must be >= 1")
    taps = _taps(h_hat)
    if taps.size < N * I:
        raise ConfigError(f"CIR estimate has {taps.size} taps, need N*I = {N * I}")
    hm = taps[: N * I].reshape(N, I)
    train = _bits(at)
    Kt = train.size
    K = Kt + Ki
    rv = _values(r)
    if rv.size < K * I:
        raise ConfigError(f"record has {rv.size} samples, need {K * I}")
    rv = rv[: K * I]
    h0 = hm[0]
    h0h0 = float(h0 @ h0)

    if N == 1:
        seg = rv[Kt * I :].reshape(Ki, I)
        gain = 2.0 * seg @ h0 - h0h0  # metric(b=0) - metric(b=1)
        bits = (gain > 0).astype(np.int8)
    else:
        S = 1 << (N - 1)
        half = S >> 1
        # isi[s] = sum over m >= 1 of bit (m-1) of s times hm[m]
        isi = np.zeros((1, I))
        for m in range(1, N):
            isi = np.concatenate([isi, isi + hm[m]])
        energy = np.einsum("ij,ij->i", isi, isi)
        cross = isi @ h0
        del isi

        start = 0
        for m in range(1, N):
            k = Kt - m
            if k >= 0 and train[k]:
                start |= 1 << (m - 1)
        metric = np.full(S, np.inf)
        metric[start] = 0.0

        # new state 2q + b has predecessors q (oldest bit 0) and q + half
        survivors = np.empty((Ki, (S + 7) // 8), dtype=np.uint8)
        pick1 = np.empty(S, dtype=bool)
        new = np.empty(S)
        for j in range(Ki):
            k = Kt + j
            rk = rv[k * I : (k + 1) * I]
            c = hm[1:] @ rk
            proj = np.zeros(1)
            for cm in c:
                proj = np.concatenate([proj, proj + cm])
            # ||rk - isi - b h0||^2 up to the constant ||rk||^2
            v0 = metric + energy - 2.0 * proj
            v1 = v0 + (2.0 * cross - 2.0 * float(rk @ h0) + h0h0)
            for b, v in ((0, v0), (1, v1)):
                lo, hi = v[:half], v[half:]
                take_hi = hi < lo
                pick1[b::2] = take_hi
                new[b::2] = np.where(take_hi, hi, lo)
            metric, new = new, metric
            survivors[j] = np.packbits(pick1)
        state = int(np.argmin(metric))
        bits = np.zeros(Ki, dtype=np.int8)
        for j in range(Ki - 1, -1, -1):
            bits[j] = state & 1
            byte = survivors[j, state >> 3]
            came_from_p1 = (byte >> (7 - (state & 7))) & 1
            state = (state >> 1) | (half if came_from_p1 else 0)
    full = np.concatenate([train, bits])
    return DetectionResult(bits, objective=sequence_objective(rv, taps[: N * I], full, I))


def increase_params(
    model: CirModel,
    I: int | None = None,
    dt: float | None = None,
    shape: tuple[float, float] = INCREASE_SHAPE,
) -> IncreaseParams:
    """Threshold h_peak / 20 and sampling offset at the expected peak.

    The peak is taken from the analytic CIR of ``model``'s geometry with the
    Beta shapes replaced by ``shape``.
    """
    I = model.cfg.oversampling if I is None else I
    dt = model.cfg.dt if dt is None else dt
    ref = model.with_init(*shape)
    i_peak = int(math.floor((t_peak(ref) - t_start(ref)) / dt + 0.5))
    return IncreaseParams(xi=h_peak(ref) / 20.0, I_off=min(I - 1, i_peak))


def increase_detect(r, p: IncreaseParams, K: int, I: int) -> DetectionResult:
    """Decide 1 where the signal rises by more than xi within the interval."""
    if p.I_off >= I:
        raise ConfigError(f"I_off={p.I_off} must be below I={I}")
    rv = _values(r)
    need = (K - 1) * I + p.I_off + 1
    if rv.size < need:
        raise ConfigError(f"record has {rv.size} samples, need {need}")
    i1 = np.arange(K) * I
    rise = rv[i1 + p.I_off] - rv[i1]
    return DetectionResult((rise > p.xi).astype(np.int8))


def count_errors(bits_hat, bits_true, skip: int = 0) -> int:
    """Hamming distance over indices >= skip."""
    a = np.asarray(bits_hat).ravel()
    b = np.asarray(bits_true).ravel()
    if a.shape != b.shape:
        raise ConfigError(f"length mismatch {a.size} vs {b.size}")
    return int(np.count_nonzero(a[skip:] != b[skip:]))
