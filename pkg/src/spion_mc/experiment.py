"""Synthetic versions of the two bench experiments.

``pulse_train`` sends isolated pulses, segments and averages them and fits
the CIR model. ``data_transmission`` sends a random OOK block, estimates the
channel from a training prefix and runs both detectors on the rest.

Both go through the same receive chain as bench data: simulated irregular
samples, linear resampling, threshold synchronization.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .cir import CirModel, h_peak, t_start
from .errors import ConfigError, SpionError
from .estimation import ChannelEstimate, fit_model, fit_samples
from .detection import count_errors, increase_detect, increase_params, viterbi_detect
from .params import (
    CM,
    DEFAULT_DISTANCES_CM,
    MEMORY_SYMBOLS,
    PULSE_TRAIN_PERIOD_S,
    REFERENCE_FITS,
    TRAINING_MODEL,
    TRAINING_SAMPLES,
    TestbedConfig,
    distance_key,
)
from .signal import (
    RegularSignal,
    SampledSignal,
    SymbolSequence,
    pam_values,
    resample_linear,
    rmse,
    simulate_rx,
    synchronize,
    write_csv,
)

SCHEMA = "spion_mc.report/1"
OUTPUT_ENV = "SPION_MC_OUTPUT"
PULSE_TRAIN = "pulse_train"
DATA_TRANSMISSION = "data_transmission"
ESTIMATORS = ("model", "samples")
DETECTORS = ("viterbi", "increase")
SCORED_SYMBOLS = 300
OVERLAP_TOL = 0.02  # tail/peak ratio counted as overlap for untruncated channels


def _schedule(table: dict, d: float, override: dict | None):
    key = distance_key(d)
    if override:
        for k, v in override.items():
            if int(k) == key:
                return v
    return table[key]


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = DATA_TRANSMISSION
    distances: tuple[float, ...] = tuple(k * CM for k in DEFAULT_DISTANCES_CM)
    K: int = 400
    pulses: int = 15
    seed: int = 0
    noise_sigma: float = 0.0
    jitter_sigma: float = 0.0
    estimators: tuple[str, ...] = ESTIMATORS
    detectors: tuple[str, ...] = DETECTORS
    # per-distance overrides keyed by distance in cm
    Kt_model: dict = field(default_factory=dict)
    Kt_samples: dict = field(default_factory=dict)
    memory: dict = field(default_factory=dict)
    periods: dict = field(default_factory=dict)
    truth: dict = field(default_factory=dict)
    channel_memory: bool = True  # truncate the synthetic CIR after N symbols
    alignment: str = "sync"  # or "oracle": cut the record at the known t0
    lz: float = 0.0
    quiet: float = 2.0
    tail: float = 10.0
    cfg: TestbedConfig = field(default_factory=TestbedConfig)

    def __post_init__(self):
        if self.kind not in (PULSE_TRAIN, DATA_TRANSMISSION):
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.alignment not in ("sync", "oracle"):
            raise ConfigError(f"unknown alignment {self.alignment!r}")
        if not self.distances or any(d <= 0 for d in self.distances):
            raise ConfigError("distances must be positive")
        if any(e not in ESTIMATORS for e in self.estimators):
            raise ConfigError(f"estimators must be drawn from {ESTIMATORS}")
        if any(e not in DETECTORS for e in self.detectors):
            raise ConfigError(f"detectors must be drawn from {DETECTORS}")
        if self.K < 1 or self.pulses < 1:
            raise ConfigError("K and pulses must be positive")
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))

    def N(self, d: float) -> int:
        return int(_schedule(MEMORY_SYMBOLS, d, self.memory))

    def Kt(self, d: float, estimator: str) -> int:
        table, override = (
            (TRAINING_MODEL, self.Kt_model) if estimator == "model" else (TRAINING_SAMPLES, self.Kt_samples)
        )
        return int(_schedule(table, d, override))

    def period(self, d: float) -> float:
        return float(_schedule(PULSE_TRAIN_PERIOD_S, d, self.periods))

    def ground_truth(self, d: float) -> tuple[float, float, float]:
        return tuple(float(v) for v in _schedule(REFERENCE_FITS, d, self.truth))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["cfg"] = self.cfg.to_dict()
        out["distances"] = list(self.distances)
        out["estimators"] = list(self.estimators)
        out["detectors"] = list(self.detectors)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown experiment fields: {sorted(unknown)}")
        if "cfg" in data and not isinstance(data["cfg"], TestbedConfig):
            data["cfg"] = TestbedConfig.from_dict(data["cfg"])
        for key in ("distances", "estimators", "detectors"):
            if key in data:
                data[key] = tuple(data[key])
        for key in ("Kt_model", "Kt_samples", "memory", "periods", "truth"):
            if key in data:
                data[key] = {int(k): v for k, v in data[key].items()}
        return cls(**data)


@dataclass
class ExperimentResult:
    """Report payload plus the arrays written next to it."""

    report: dict
    signals: dict[str, SampledSignal | RegularSignal] = field(default_factory=dict)
    estimates: dict[str, ChannelEstimate] = field(default_factory=dict)
    overlays: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def empty(cls) -> "ExperimentResult":
        return cls(report={"schema": SCHEMA, "kind": None, "spec": None, "results": []})


def _receive(spec: ExperimentSpec, model: CirModel, bits: SymbolSequence, gamma: float,
             memory: int | None, seed: int) -> tuple[SampledSignal, RegularSignal, int]:
    """Simulate, resample and align one record; returns (raw, aligned, i_start)."""
    cfg = model.cfg
    t0 = t_start(model)
    phase = 0.0
    if spec.alignment == "oracle":
        # put a sampling instant exactly on t0
        phase = t0 - math.floor(t0 / cfg.dt) * cfg.dt
    raw = simulate_rx(
        model, bits, spec.noise_sigma, spec.jitter_sigma, seed=seed,
        quiet=spec.quiet, tail=max(spec.tail, t0 + 2.0), gamma=gamma, memory=memory, phase=phase,
    )
    x = resample_linear(raw, cfg.dt)
    if spec.alignment == "sync":
        i_start, r = synchronize(x)
    else:
        i_start = int(round((t0 - phase - x.t_first) / cfg.dt))
        r = RegularSignal(cfg.dt, x.values[i_start:], x.t_first + i_start * cfg.dt, i_start)
    return raw, r, i_start


def _truth_model(spec: ExperimentSpec, d: float, cfg: TestbedConfig):
    alpha, beta, gamma = spec.ground_truth(d)
    return CirModel(cfg, d, lz=spec.lz).with_init(alpha, beta), gamma


def _pulse_train_one(spec: ExperimentSpec, d: float) -> dict:
    key = distance_key(d)
    period = spec.period(d)
    N = spec.N(d)
    cfg_sym = spec.cfg.replace(d=d)
    I_sym = cfg_sym.oversampling
    cfg = cfg_sym.replace(T=period)
    I_pt = cfg.oversampling
    model, gamma = _truth_model(spec, d, cfg)
    t0 = t_start(model)
    memory_s = N * cfg_sym.T
    if spec.channel_memory:
        if t0 + memory_s > period:
            raise ConfigError(f"pulse period {period} s shorter than CIR support at d={d} m")
        memory = memory_s / period  # simulate_rx counts memory in symbol periods
    else:
        memory = None
        if float(model(period)) > OVERLAP_TOL * h_peak(model):
            raise ConfigError(f"consecutive pulses overlap at d={d} m with period {period} s")
    bits = SymbolSequence(np.ones(spec.pulses, dtype=np.int8))
    raw, r, i_start = _receive(spec, model, bits, gamma, memory, spec.seed + 7919 * key)
    need = spec.pulses * I_pt
    if len(r) < need:
        raise ConfigError("record too short to segment every pulse")
    segments = r.values[:need].reshape(spec.pulses, I_pt)
    mean = segments.mean(axis=0)
    n_fit = N * I_sym
    at = np.zeros(N, dtype=np.int8)
    at[0] = 1
    est = fit_model(mean[:n_fit], at, cfg_sym, d, N, I_sym)
    c_d = model.c_d
    spread = float(np.max(np.abs(segments - mean))) / c_d
    model_curve = np.zeros(I_pt)
    model_curve[:n_fit] = est.h
    overlay = np.column_stack([r.dt * np.arange(I_pt), segments.T, mean, model_curve])
    return {
        "row": {
            "d_m": d,
            "period_s": period,
            "c_d": c_d,
            "t0": t0,
            "i_start": i_start,
            "N": N,
            "truth": {"alpha": model.init.alpha, "beta": model.init.beta, "gamma": gamma},
            "fitted": dict(zip(("alpha", "beta", "gamma"), est.fitted)),
            "residual": est.residual,
            "max_segment_deviation": spread,
        },
        "signals": {f"d{key}cm_rx": raw},
        "estimates": {f"d{key}cm_model": est},
        "overlays": {f"d{key}cm_pulses": overlay},
    }


def _data_transmission_one(spec: ExperimentSpec, d: float) -> dict:
    key = distance_key(d)
    cfg = spec.cfg.replace(d=d)
    I = cfg.oversampling
    K = spec.K
    N = spec.N(d)
    model, gamma = _truth_model(spec, d, cfg)
    bits = SymbolSequence.random(K, spec.seed + 104729 * key)
    memory = N if spec.channel_memory else None
    raw, r, i_start = _receive(spec, model, bits, gamma, memory, spec.seed + 7919 * key)
    if len(r) < K * I:
        raise ConfigError(f"synchronized record holds {len(r)} samples, need {K * I}")
    r = r.head(K * I)
    c_d = model.c_d
    skip = K - SCORED_SYMBOLS if K > SCORED_SYMBOLS else 0
    row: dict[str, Any] = {
        "d_m": d,
        "c_d": c_d,
        "t0": t_start(model),
        "i_start": i_start,
        "N": N,
        "truth": {"alpha": model.init.alpha, "beta": model.init.beta, "gamma": gamma},
        "scored_from": skip,
        "estimates": {},
    }
    estimates = {}
    for name in spec.estimators:
        Kt = spec.Kt(d, name)
        if not 0 < Kt < K:
            raise ConfigError(f"training length {Kt} invalid for K={K}")
        at = bits.bits[:Kt]
        if name == "model":
            est = fit_model(r, at, cfg, d, N, I)
        else:
            est = fit_samples(r, at, N, I)
        entry: dict[str, Any] = {
            "Kt": Kt,
            "residual": est.residual,
            "rmse": rmse(r, pam_values(bits.bits, est.h, I, K * I), K, c_d),
        }
        if est.fitted is not None:
            entry["fitted"] = dict(zip(("alpha", "beta", "gamma"), est.fitted))
        if "viterbi" in spec.detectors:
            det = viterbi_detect(r, est, at, K - Kt, N, I)
            full = np.concatenate([at, det.bits_hat])
            entry["viterbi_errors"] = count_errors(full, bits.bits, skip)
            entry["viterbi_errors_all"] = count_errors(full[Kt:], bits.bits[Kt:])
        row["estimates"][name] = entry
        estimates[f"d{key}cm_{name}"] = est
    if "increase" in spec.detectors:
        p = increase_params(CirModel(cfg, d), I, cfg.dt)
        det = increase_detect(r, p, K, I)
        row["increase"] = {
            "xi": p.xi,
            "I_off": p.I_off,
            "errors": count_errors(det.bits_hat, bits.bits, skip),
        }
    return {
        "row": row,
        "signals": {f"d{key}cm_rx": raw, f"d{key}cm_sync": r},
        "estimates": estimates,
        "overlays": {},
        "bits": bits.bits.astype(int).tolist(),
    }


def _run_one(args):
    spec, d = args
    if spec.kind == PULSE_TRAIN:
        return _pulse_train_one(spec, d)
    return _data_transmission_one(spec, d)


def _run(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    jobs = [(spec, d) for d in spec.distances]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_one, jobs))
    else:
        parts = [_run_one(j) for j in jobs]
    res = ExperimentResult(
        report={
            "schema": SCHEMA,
            "kind": spec.kind,
            "spec": spec.to_dict(),
            "config": spec.cfg.to_dict(),
            "results": [p["row"] for p in parts],
        }
    )
    for p in parts:
        res.signals.update(p["signals"])
        res.estimates.update(p["estimates"])
        res.overlays.update(p["overlays"])
        if "bits" in p:
            res.report.setdefault("bits", {})[f"{distance_key(p['row']['d_m'])}"] = p["bits"]
    return res


def run_pulse_train(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    if spec.kind != PULSE_TRAIN:
        raise ConfigError(f"experiment kind is {spec.kind!r}, expected pulse_train")
    return _run(spec, workers)


def run_data_transmission(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    if spec.kind != DATA_TRANSMISSION:
        raise ConfigError(f"experiment kind is {spec.kind!r}, expected data_transmission")
    return _run(spec, workers)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    return _run(spec, workers)


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "spion_mc_out"))


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def emit_report(result: ExperimentResult, outdir: str | Path | None = None) -> Path:
    """Write ``report.json``, ``signals/*.csv`` and ``estimates/*.json``."""
    outdir = Path(outdir) if outdir is not None else default_output_root()
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        report_path = outdir / "report.json"
        report_path.write_text(_dumps(result.report))
        for name, sig in sorted(result.signals.items()):
            write_csv(sig, outdir / "signals" / f"{name}.csv")
        for name, arr in sorted(result.overlays.items()):
            n_seg = arr.shape[1] - 3
            header = ",".join(["t_s"] + [f"chi_{i}" for i in range(n_seg)] + ["chi_mean", "chi_model"])
            path = outdir / "signals" / f"{name}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            rows = [",".join(repr(float(v)) for v in row) for row in arr]
            path.write_text(header + "\n" + "\n".join(rows) + "\n")
        for name, est in sorted(result.estimates.items()):
            (outdir / "estimates").mkdir(parents=True, exist_ok=True)
            (outdir / "estimates" / f"{name}.json").write_text(_dumps(est.to_dict()))
    except OSError as exc:
        raise SpionError(f"cannot write report under {outdir}: {exc}") from exc
    return report_path


def read_report(path: str | Path) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "report.json"
    data = json.loads(path.read_text())
    if data.get("schema") != SCHEMA:
        raise ConfigError(f"{path} is not a {SCHEMA} report")
    return data
