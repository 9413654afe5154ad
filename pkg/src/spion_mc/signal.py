"""Symbol sequences, PAM synthesis, a synthetic receiver, and preprocessing.

Preprocessing follows the bench pipeline: irregular receiver samples are
linearly resampled onto a fixed grid, then the record is cut at the first
sustained rise above a fraction of its peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .cir import CirModel, cir, t_start
from .errors import ConfigError, SyncNotFound

SYNC_RUN = 10
SYNC_FRACTION = 0.01
JITTER_CLIP = 0.45  # max |jitter| as a fraction of dt, keeps timestamps ordered


def make_rng(seed: int | None) -> np.random.Generator:
    """PCG64 stream; its integer and normal draws are stable across platforms."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class SymbolSequence:
    bits: np.ndarray
    n_train: int = 0

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8).ravel()
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ConfigError("symbols must be 0 or 1")
        if not 0 <= self.n_train <= bits.size:
            raise ConfigError(f"training length {self.n_train} outside [0, {bits.size}]")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return int(self.bits.size)

    @property
    def training(self) -> np.ndarray:
        return self.bits[: self.n_train]

    @property
    def info(self) -> np.ndarray:
        return self.bits[self.n_train :]

    def with_training(self, n_train: int) -> "SymbolSequence":
        return SymbolSequence(self.bits, n_train)

    @classmethod
    def random(cls, K: int, seed: int | None, n_train: int = 0, first_one: bool = True):
        """Uniform random bits; bit 0 is forced to 1 as the timing anchor."""
        bits = make_rng(seed).integers(0, 2, size=K, dtype=np.int8)
        if first_one and K:
            bits[0] = 1
        return cls(bits, n_train)


@dataclass(frozen=True)
class SampledSignal:
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.size != v.size:
            raise ConfigError("timestamps and values differ in length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ConfigError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class RegularSignal:
    dt: float
    values: np.ndarray
    t_first: float = 0.0  # time of values[0]
    i_start: int = 0  # index in the unsynchronized record where values[0] sits

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).ravel())

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def timestamps(self) -> np.ndarray:
        return self.t_first + self.dt * np.arange(len(self))

    def head(self, n: int) -> "RegularSignal":
        return replace(self, values=self.values[:n])

    def to_sampled(self) -> SampledSignal:
        return SampledSignal(self.timestamps, self.values)


def pam_synthesize(a, h, I: int, dt: float = 1.0) -> RegularSignal:
    """Noise-free PAM signal s[i] = sum_k a[k] h[i - k I].

    The output covers every symbol interval and the full tail of the last
    pulse, i.e. ``max(K I, (K - 1) I + len(h))`` samples.
    """
    bits = a.bits if isinstance(a, SymbolSequence) else np.asarray(a)
    h = np.asarray(h, dtype=float)
    if I < 1:
        raise ConfigError("oversampling factor must be >= 1")
    K = int(bits.size)
    if K == 0:
        return RegularSignal(dt, np.zeros(len(h)))
    n = max(K * I, (K - 1) * I + h.size)
    up = np.zeros(n)
    up[: K * I : I] = bits
    out = np.convolve(up, h)[:n] if h.size else np.zeros(n)
    return RegularSignal(dt, out)


def pam_values(bits, h, I: int, n: int) -> np.ndarray:
    """First ``n`` samples of :func:`pam_synthesize`, zero-padded if short."""
    s = pam_synthesize(bits, h, I).values
    if s.size >= n:
        return s[:n]
    return np.concatenate([s, np.zeros(n - s.size)])


def simulate_rx(
    model: CirModel,
    a: SymbolSequence,
    noise_sigma: float = 0.0,
    jitter_sigma: float = 0.0,
    seed: int | None = 0,
    quiet: float = 2.0,
    tail: float = 10.0,
    gamma: float = 1.0,
    memory: float | None = None,
    phase: float = 0.0,
) -> SampledSignal:
    """Synthetic susceptometer record of the PAM signal driven by ``model``.

    Symbol k is injected at ``k T``; samples are taken at ``n dt - quiet``
    plus Gaussian timing jitter (std ``jitter_sigma`` seconds, clipped to
    0.45 dt). White Gaussian noise of std ``noise_sigma * c_d`` is added.
    ``memory`` truncates the CIR half a sample before ``t0 + memory T``, so
    on the nominal grid it keeps exactly ``memory I`` samples from t0 on and
    the channel becomes an exact finite-tap PAM channel.

    ``phase`` delays every sampling instant by that many seconds while the
    reported timestamps stay on the nominal grid, i.e. the recorder clock
    reads ``n dt - quiet`` at true time ``n dt - quiet + phase``.
    """
    cfg = model.cfg
    dt, T = cfg.dt, cfg.T
    if jitter_sigma < 0 or noise_sigma < 0:
        raise ConfigError("noise and jitter levels must be nonnegative")
    if jitter_sigma > JITTER_CLIP * dt:
        raise ConfigError(
            f"jitter_sigma={jitter_sigma} too large for dt={dt}: sample order would not survive clipping"
        )
    rng = make_rng(seed)
    n_quiet = int(round(quiet / dt))
    n_total = n_quiet + int(math.ceil((len(a) * T + tail) / dt))
    t = dt * (np.arange(n_total) - n_quiet)
    if jitter_sigma > 0:
        jit = np.clip(rng.normal(0.0, jitter_sigma, n_total), -JITTER_CLIP * dt, JITTER_CLIP * dt)
        t = t + jit
    stamps = t
    t = t + phase
    t_cut = t_start(model) + memory * T - 0.5 * dt if memory is not None else math.inf
    clean = np.zeros(n_total)
    for k in np.flatnonzero(a.bits):
        rel = t - k * T
        live = (rel > 0) & (rel < t_cut)
        clean[live] += cir(model, rel[live])
    clean *= gamma
    if noise_sigma > 0:
        clean = clean + rng.normal(0.0, noise_sigma * model.c_d, n_total)
    return SampledSignal(stamps, clean)


def resample_linear(x: SampledSignal, dt: float = 0.1) -> RegularSignal:
    """Linear interpolation onto multiples of ``dt``.

    The grid starts at the first timestamp rounded down to a multiple of dt
    and ends at the last one rounded down; a leading grid point before the
    record takes the first sample's value.
    """
    if len(x) < 2:
        raise ConfigError("resampling needs at least two samples")
    t = x.timestamps
    eps = 1e-9
    k0 = math.floor(t[0] / dt + eps)
    k1 = math.floor(t[-1] / dt + eps)
    # same expression as RegularSignal.timestamps, so regular input maps onto itself
    grid = k0 * dt + dt * np.arange(k1 - k0 + 1)
    grid = np.clip(grid, t[0], t[-1])
    return RegularSignal(dt, np.interp(grid, t, x.values), t_first=k0 * dt)


def synchronize(
    x: RegularSignal, run: int = SYNC_RUN, fraction: float = SYNC_FRACTION
) -> tuple[int, RegularSignal]:
    """Find the first run of ``run`` samples above ``fraction`` of the peak.

    Returns the run's start index and the record shifted to begin there.
    """
    v = x.values
    if v.size == 0:
        raise ConfigError("cannot synchronize an empty signal")
    thr = fraction * float(v.max())
    above = (v > thr).astype(np.int64)
    if above.size < run:
        raise SyncNotFound("signal shorter than the synchronization run")
    window = np.convolve(above, np.ones(run, dtype=np.int64), mode="valid")
    hits = np.flatnonzero(window == run)
    if hits.size == 0:
        raise SyncNotFound(f"no run of {run} samples above {thr:g}")
    i = int(hits[0])
    shifted = RegularSignal(x.dt, v[i:], t_first=x.t_first + i * x.dt, i_start=x.i_start + i)
    return i, shifted


def rmse(r, s, K: int, c_d: float) -> float:
    """sqrt(||r - s||^2 / K / c_d^2): squared error normalized per symbol."""
    r = r.values if isinstance(r, RegularSignal) else np.asarray(r, dtype=float)
    s = s.values if isinstance(s, RegularSignal) else np.asarray(s, dtype=float)
    if r.shape != s.shape:
        raise ConfigError(f"length mismatch {r.shape} vs {s.shape}")
    return math.sqrt(float(np.sum((r - s) ** 2)) / K / c_d**2)


def write_csv(sig: SampledSignal | RegularSignal, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if isinstance(sig, RegularSignal):
        lines.append(f"# dt={sig.dt!r}")
    lines.append("t_s,chi")
    lines += [f"{t!r},{v!r}" for t, v in zip(sig.timestamps.tolist(), sig.values.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: str | Path) -> SampledSignal | RegularSignal:
    dt = None
    ts, vs = [], []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "dt":
                dt = float(val)
            continue
        if line.replace(" ", "") == "t_s,chi":
            continue
        t, v = line.split(",")
        ts.append(float(t))
        vs.append(float(v))
    if dt is None:
        return SampledSignal(np.array(ts), np.array(vs))
    return RegularSignal(dt, np.array(vs), t_first=ts[0] if ts else 0.0)
