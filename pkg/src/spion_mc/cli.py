"""Command line entry point: ``spion-mc <subcommand>``.

Every flag can also come from the ``options`` object of the JSON file given
with ``--config``; flags given on the command line win. The rest of that
file holds :class:`TestbedConfig` fields in SI units.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 no sync found.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .cir import BetaInit, CirModel, h_peak, t_peak, t_start
from .detection import count_errors, increase_detect, increase_params, viterbi_detect
from .errors import ConfigError, SpionError
from .estimation import ChannelEstimate, fit_model, fit_samples
from .experiment import (
    DATA_TRANSMISSION,
    PULSE_TRAIN,
    ExperimentSpec,
    default_output_root,
    emit_report,
    read_report,
    run_experiment,
)
from .params import CM, MM, MEMORY_SYMBOLS, TestbedConfig, distance_key
from .physics import regime_report, regime_thresholds
from .signal import (
    RegularSignal,
    SampledSignal,
    SymbolSequence,
    read_csv,
    resample_linear,
    simulate_rx,
    synchronize,
    write_csv,
)

log = logging.getLogger("spion_mc")


def _load_config(path: str | None) -> tuple[TestbedConfig, dict]:
    if path is None:
        return TestbedConfig(), {}
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    options = data.pop("options", {}) or {}
    return TestbedConfig.from_dict(data), options


def _merge(args: argparse.Namespace, options: dict) -> argparse.Namespace:
    for key, value in options.items():
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise ConfigError(f"unknown option {key!r} for {args.command}")
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _opt(args, name, default):
    v = getattr(args, name, None)
    return default if v is None else v


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_symbols(path: str) -> SymbolSequence:
    data = json.loads(Path(path).read_text())
    if isinstance(data, list):
        return SymbolSequence(np.array(data))
    return SymbolSequence(np.array(data["bits"]), int(data.get("n_train", 0)))


def _regular(sig: SampledSignal | RegularSignal, dt: float, sync: bool) -> RegularSignal:
    reg = sig if isinstance(sig, RegularSignal) else resample_linear(sig, dt)
    if sync:
        _, reg = synchronize(reg)
    return reg


def cmd_characterize(args, cfg: TestbedConfig) -> int:
    d = _opt(args, "d_cm", cfg.d / CM) * CM
    rep = regime_report(cfg, d)
    thr = regime_thresholds(cfg, d)
    payload = {"d_m": d, "regime": rep.to_dict(), "thresholds": thr.to_dict()}
    if _opt(args, "json", False):
        _write(json.dumps(payload, indent=2) + "\n", args.out)
        return 0
    rows = [(k, f"{v:.6g}" if isinstance(v, float) else str(v), "") for k, v in rep.to_dict().items()]
    rows += [(k, f"{v:.6g}", unit) for k, (v, unit) in thr.to_display().items()]
    width = max(len(r[0]) for r in rows)
    lines = [f"d = {d * 100:g} cm"] + [f"{k:<{width}}  {v:>14}  {u}" for k, v, u in rows]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_cir(args, cfg: TestbedConfig) -> int:
    d = _opt(args, "d_cm", cfg.d / CM) * CM
    model = CirModel(
        cfg, d, BetaInit(_opt(args, "alpha", 3.0), _opt(args, "beta", 3.0)),
        lz=_opt(args, "lz_mm", 0.0) * MM,
    )
    step = _opt(args, "dt", cfg.dt)
    t_max = _opt(args, "t_max", 10 * t_start(model))
    t = step * np.arange(int(math.floor(t_max / step)) + 1)
    h = model(t)
    header = {
        "t0": t_start(model),
        "t_peak": t_peak(model),
        "h_peak": h_peak(model),
        "c_d": model.c_d,
    }
    lines = ["# " + json.dumps(header), "t_s,h"] + [f"{a!r},{b!r}" for a, b in zip(t.tolist(), h.tolist())]
    _write("\n".join(lines) + "\n", args.out)
    return 0


def cmd_synth(args, cfg: TestbedConfig) -> int:
    d = _opt(args, "d_cm", cfg.d / CM) * CM
    cfg = cfg.replace(d=d)
    seed = _opt(args, "seed", 0)
    K = _opt(args, "K", 400)
    bits = SymbolSequence.random(K, seed)
    model = CirModel(cfg, d, BetaInit(_opt(args, "alpha", 3.0), _opt(args, "beta", 3.0)))
    memory = _opt(args, "memory", None)
    rx = simulate_rx(
        model, bits, _opt(args, "noise_sigma", 0.0), _opt(args, "jitter_sigma", 0.0),
        seed=seed + 1, gamma=_opt(args, "gamma", 1.0), memory=memory,
    )
    out = Path(_opt(args, "out", str(default_output_root() / "synth")))
    write_csv(rx, out / "rx.csv")
    (out / "symbols.json").write_text(json.dumps({"bits": bits.bits.tolist(), "n_train": 0}) + "\n")
    log.info("wrote %s", out)
    return 0


def cmd_fit(args, cfg: TestbedConfig) -> int:
    d = _opt(args, "d_cm", cfg.d / CM) * CM
    cfg = cfg.replace(d=d)
    N = _opt(args, "N", MEMORY_SYMBOLS[distance_key(d)])
    symbols = _read_symbols(args.symbols)
    Kt = _opt(args, "Kt", symbols.n_train or len(symbols))
    r = _regular(read_csv(args.signal), cfg.dt, not _opt(args, "no_sync", False))
    I = cfg.oversampling
    at = symbols.bits[:Kt]
    if _opt(args, "method", "model") == "model":
        est = fit_model(r, at, cfg, d, N, I)
    else:
        est = fit_samples(r, at, N, I, ridge=_opt(args, "ridge", 0.0))
    _write(json.dumps(est.to_dict(), indent=2) + "\n", args.out)
    return 0


def cmd_detect(args, cfg: TestbedConfig) -> int:
    d = _opt(args, "d_cm", cfg.d / CM) * CM
    cfg = cfg.replace(d=d)
    I = cfg.oversampling
    r = _regular(read_csv(args.signal), cfg.dt, not _opt(args, "no_sync", False))
    symbols = _read_symbols(args.symbols)
    K = _opt(args, "K", len(symbols))
    method = _opt(args, "method", "viterbi")
    if method == "viterbi":
        if not args.estimate:
            raise ConfigError("viterbi detection needs --estimate")
        est = ChannelEstimate.load(args.estimate)
        N = _opt(args, "N", est.N or MEMORY_SYMBOLS[distance_key(d)])
        Kt = _opt(args, "Kt", symbols.n_train)
        at = symbols.bits[:Kt]
        res = viterbi_detect(r, est, at, K - Kt, N, I)
        decided = np.concatenate([at, res.bits_hat])
    else:
        p = increase_params(CirModel(cfg, d), I, cfg.dt)
        res = increase_detect(r, p, K, I)
        decided = res.bits_hat
    out = {"method": method, "bits_hat": decided.astype(int).tolist()}
    if res.objective is not None:
        out["objective"] = res.objective
    if _opt(args, "truth", False):
        skip = _opt(args, "skip", max(K - 300, 0))
        out["skip"] = skip
        out["errors"] = count_errors(decided, symbols.bits[:K], skip)
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_experiment(args, cfg: TestbedConfig) -> int:
    data = {}
    if args.spec:
        data = json.loads(Path(args.spec).read_text())
    for key in ("kind", "seed", "noise_sigma", "jitter_sigma", "alignment", "K"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    if args.distances_cm:
        data["distances"] = [v * CM for v in args.distances_cm]
    if args.truncate is not None:
        data["channel_memory"] = args.truncate
    data.setdefault("cfg", cfg.to_dict())
    spec = ExperimentSpec.from_dict(data)
    result = run_experiment(spec, workers=_opt(args, "workers", 1))
    out = Path(args.out) if args.out else default_output_root() / spec.kind
    path = emit_report(result, out)
    log.info("wrote %s", path)
    sys.stdout.write(json.dumps(result.report["results"], indent=2) + "\n")
    return 0


def cmd_eval(args, cfg: TestbedConfig) -> int:
    report = read_report(args.report)
    lines = []
    for row in report["results"]:
        cm = row["d_m"] / CM
        if report["kind"] == PULSE_TRAIN:
            f = row["fitted"]
            lines.append(
                f"d={cm:g} cm  alpha={f['alpha']:.3f} beta={f['beta']:.3f} gamma={f['gamma']:.3f}"
            )
            continue
        parts = [f"d={cm:g} cm"]
        for name, est in row["estimates"].items():
            parts.append(
                f"{name}: Kt={est['Kt']} rmse={est['rmse']:.4g} errors={est.get('viterbi_errors', '-')}"
            )
        if "increase" in row:
            parts.append(f"increase: errors={row['increase']['errors']}")
        lines.append("  ".join(parts))
    _write("\n".join(lines) + ("\n" if lines else ""), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spion-mc", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON config (TestbedConfig fields + optional 'options')")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--d-cm", type=float, default=None)
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("characterize", help="flow regime report and thresholds")
    common(sp)
    sp.add_argument("--json", action="store_true", default=None)

    sp = sub.add_parser("cir", help="evaluate the CIR on a time grid")
    common(sp)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--lz-mm", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--t-max", type=float)

    sp = sub.add_parser("synth", help="simulate a received record for random bits")
    common(sp)
    sp.add_argument("--K", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--noise-sigma", type=float)
    sp.add_argument("--jitter-sigma", type=float)
    sp.add_argument("--memory", type=int)

    sp = sub.add_parser("fit", help="estimate the channel from a training prefix")
    common(sp)
    sp.add_argument("--signal", required=True)
    sp.add_argument("--symbols", required=True)
    sp.add_argument("--method", choices=("model", "samples"))
    sp.add_argument("--Kt", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--ridge", type=float)
    sp.add_argument("--no-sync", action="store_true", default=None)

    sp = sub.add_parser("detect", help="decide symbols from a received record")
    common(sp)
    sp.add_argument("--signal", required=True)
    sp.add_argument("--symbols", required=True, help="training prefix source, and truth with --truth")
    sp.add_argument("--estimate")
    sp.add_argument("--method", choices=("viterbi", "increase"))
    sp.add_argument("--K", type=int)
    sp.add_argument("--Kt", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--truth", action="store_true", default=None)
    sp.add_argument("--skip", type=int)
    sp.add_argument("--no-sync", action="store_true", default=None)

    sp = sub.add_parser("experiment", help="run a synthetic pulse-train or data experiment")
    sp.add_argument("--kind", choices=(PULSE_TRAIN, DATA_TRANSMISSION))
    sp.add_argument("--spec", help="JSON with ExperimentSpec fields")
    sp.add_argument("--distances-cm", type=float, nargs="+")
    sp.add_argument("--K", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--noise-sigma", type=float)
    sp.add_argument("--jitter-sigma", type=float)
    sp.add_argument("--alignment", choices=("sync", "oracle"))
    sp.add_argument("--truncate", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--out")

    sp = sub.add_parser("eval", help="summarize a report directory")
    sp.add_argument("report")
    sp.add_argument("--out")
    return p


COMMANDS = {
    "characterize": cmd_characterize,
    "cir": cmd_cir,
    "synth": cmd_synth,
    "fit": cmd_fit,
    "detect": cmd_detect,
    "experiment": cmd_experiment,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg, options = _load_config(args.config)
        args = _merge(args, options)
        return COMMANDS[args.command](args, cfg)
    except SpionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
