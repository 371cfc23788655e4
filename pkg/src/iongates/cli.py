"""Batch driver: every simulation and fit as a reproducible run.

Usage::

    iongates <command> [--config run.json] [--set key=value ...]
                       [--out DIR] [--seed N] [--threads N]

Each run writes ``config.snapshot.json`` (the fully resolved configuration,
including the seed), one or more CSV files and ``run.json`` (summary). The
snapshot can be fed back through ``--config`` to repeat the run exactly.

Configuration values are in ordinary units (Hz, s, T). Keys are validated
against the defaults of the command; nested keys are addressed with dots
in ``--set`` (``--set laser.white_linewidth_hz=11``), and the value is parsed
as JSON when possible.

Random numbers: the root seed feeds ``numpy.random.SeedSequence``; stage
``k`` of a command uses the integer ``SeedSequence(seed).spawn(K)[k]
.generate_state(1)[0]``, so stages never share streams and adding threads
does not change results.

Exit codes: 0 success, 2 configuration error, 3 a physics check flagged the
result (outputs are still written).
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np
from scipy.special import j1

from . import addressing, freqplan, msgate, noisekit, qcore, readout, seqlab
from .io import write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_PHYSICS = 0, 2, 3


class ConfigError(ValueError):
    pass


class PhysicsFlag(RuntimeError):
    pass


# -- defaults ----------------------------------------------------------------

_GATE = {"eta": 0.05, "delta_hz": 10.5e3, "omega_hz": None, "delta_asym_hz": 0.0,
         "nu_hz": 0.98e6, "n_max": 20}

_FIELD = {"static_sigma_T": 2e-10, "tone_hz": 50.0, "tone_rms_T": None,
          "ramsey_target": 0.5, "ramsey_target_time": 1.7e-3}
_NO_FIELD = {"static_sigma_T": 0.0, "tone_hz": 50.0, "tone_rms_T": 0.0,
             "ramsey_target": 0.5, "ramsey_target_time": 1.7e-3}
_LASER = {"white_linewidth_hz": 0.0, "gaussian_fwhm_hz": 0.0, "flicker_level": 0.0}

DEFAULTS = {
    "ms-scan": {**_GATE, "axis1": "time", "grid1": [0.0, 300e-6, 61],
                "axis2": "delta", "grid2": [5e3, 30e3, 26], "shots": None,
                "method": "frame", "tol": 1e-8},
    "ms-parity": {**_GATE, "t_gate": None, "phases": 20, "shots": None,
                  "population_shots": None, "method": "frame", "level": 0.95},
    "spectrum": {"omega_hz": 100e3, "pulse": 100e-6,
                 "detunings": [-2e6, 2e6, 401], "realizations": 20,
                 "bump_center": 1.1e6, "bump_fwhm": 1e6, "bump_power": None,
                 "calibration_time": 400e-6, "calibration_target": 0.49,
                 "cavity_linewidth": 22e3, "white_linewidth_hz": 0.0},
    "ramsey": {"times": [0.25e-3, 25e-3, 40], "N": 4, "realizations": 500,
               "phases": 12, "shots": None, "model": "bessel",
               "laser": dict(_LASER), "field": dict(_FIELD)},
    "mfdd": {"times": [0.5e-3, 16e-3, 24], "N": 4, "realizations": 500,
             "phases": 12, "shots": None, "model": "gaussian",
             "laser": {**_LASER, "gaussian_fwhm_hz": 65.0}, "field": dict(_FIELD)},
    "echo": {"times": [2e-3, 60e-3, 30], "N": 1, "realizations": 500,
             "phases": 12, "shots": None, "model": "exponential",
             "laser": {**_LASER, "white_linewidth_hz": 11.0}, "field": dict(_NO_FIELD)},
    "address": {"drive": "mm_sideband", "omega_mm_hz": 20e3, "omega_c_hz": None,
                "k_dot_x": [0.0, 0.1], "duration": 200e-6, "points": 201,
                "rabi_jitter": 0.0, "shots": None,
                "composite_epsilons": [1e-3, 1e-1, 21]},
    "readout-sim": {"populations": [0.25, 0.5, 0.25], "lambda_bright": 30.0,
                    "lambda_dark": 0.5, "window": 1e-3, "decay_correction": True,
                    "shots": 10000},
    "readout-fit": {"histogram": None, "lambda_bright": 30.0, "lambda_dark": 0.5,
                    "window": 1e-3, "decay_correction": True,
                    "calibration": {"dark": None, "bright": None}},
    "freq-table": {"carrier": 80e6, "base": 0.0, "f1": 80e6, "f2": None,
                   "trap_drive": 21.75e6,
                   "ms": {"trap_frequency": 0.98e6, "detuning": 10.5e3},
                   "drift": {"points": [], "max_slope": 2e3 / 60,
                             "max_curvature": None, "at": None}},
    "calibrate-lightshift": {**_GATE, "times": [0.0, 300e-6, 61],
                             "deltas": [-60e3, 60e3, 49], "shift_hz": 35e3,
                             "shots": 200, "measured": None},
}

COMMANDS = tuple(DEFAULTS)
_STAGES = 4


# -- configuration -----------------------------------------------------------

def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"{where}: unknown key")
        default = base[key]
        if isinstance(default, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected an object")
            out[key] = _merge(default, value, where + ".")
            continue
        _check_type(where, default, value)
        out[key] = value
    return out


def _check_type(where, default, value):
    if value is None or default is None:
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, (int, float)):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    else:
        ok = True
    if not ok:
        raise ConfigError(f"{where}: expected {type(default).__name__}, "
                          f"got {type(value).__name__}")


def _parse_set(item: str) -> dict:
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = cur = {}
    parts = key.strip().split(".")
    for p in parts[:-1]:
        cur[p] = {}
        cur = cur[p]
    cur[parts[-1]] = value
    return out


def _deep_update(a: dict, b: dict) -> dict:
    for k, v in b.items():
        if isinstance(v, dict) and isinstance(a.get(k), dict):
            _deep_update(a[k], v)
        else:
            a[k] = v
    return a


def resolve_config(command: str, config_path=None, overrides=(), seed=None) -> dict:
    """Defaults of ``command`` updated by the config file, then ``--set``."""
    user = {}
    if config_path is not None:
        try:
            user = json.loads(Path(config_path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {config_path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path}: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
    user = copy.deepcopy(user)
    file_cmd = user.pop("command", command)
    if file_cmd != command:
        raise ConfigError(f"command: config is for {file_cmd!r}, not {command!r}")
    file_seed = user.pop("seed", 0)
    for item in overrides:
        _deep_update(user, _parse_set(item))
    if "seed" in user:
        file_seed = user.pop("seed")
    cfg = _merge(DEFAULTS[command], user)
    cfg["seed"] = int(seed if seed is not None else file_seed)
    cfg["command"] = command
    return cfg


def stage_seeds(seed: int, count: int = _STAGES) -> list[int]:
    return [int(s.generate_state(1, dtype=np.uint64)[0])
            for s in np.random.SeedSequence(seed).spawn(count)]


def _grid(spec, where):
    if not (isinstance(spec, list) and len(spec) == 3):
        raise ConfigError(f"{where}: expected [start, stop, num]")
    start, stop, num = spec
    if int(num) < 1:
        raise ConfigError(f"{where}: num must be positive")
    return np.linspace(float(start), float(stop), int(num))


def _gate_params(cfg) -> qcore.GateParams:
    eta, delta_hz = cfg["eta"], cfg["delta_hz"]
    if cfg["omega_hz"] is None:
        p = msgate.gate_params(delta_hz, eta, nu=qcore.TWO_PI * cfg["nu_hz"],
                               n_max=int(cfg["n_max"]))
    else:
        p = qcore.GateParams.from_hz(cfg["omega_hz"], eta, delta_hz, nu_hz=cfg["nu_hz"],
                                     n_max=int(cfg["n_max"]))
    return p.replace(delta_asym=qcore.TWO_PI * cfg["delta_asym_hz"])


# -- commands ----------------------------------------------------------------

def cmd_ms_scan(cfg, out: Path, threads: int):
    params = _gate_params(cfg)
    g1 = _grid(cfg["grid1"], "grid1")
    g2 = _grid(cfg["grid2"], "grid2")
    seeds = stage_seeds(cfg["seed"])
    try:
        pm = msgate.scan_map(params, cfg["axis1"], g1, cfg["axis2"], g2,
                             shots=cfg["shots"], seed=seeds[0], method=cfg["method"],
                             tol=cfg["tol"], threads=threads)
    except msgate.ScanError as exc:
        raise PhysicsFlag(str(exc)) from None
    except ValueError as exc:
        if isinstance(exc, qcore.CutoffError):
            raise
        raise ConfigError(str(exc)) from None
    pm.to_csv(out / "map.csv")
    norm = float(np.max(np.abs(pm.p0 + pm.p1 + pm.p2 - 1)))
    flags = [] if norm <= 1e-6 else [f"normalisation error {norm:.3g}"]
    return {"normalisation_error": norm, "cells": int(pm.p0.size),
            "t_gate": qcore.TWO_PI / params.delta}, ["map.csv"], flags


def cmd_ms_parity(cfg, out: Path, threads: int):
    params = _gate_params(cfg)
    t_gate = qcore.TWO_PI / params.delta if cfg["t_gate"] is None else cfg["t_gate"]
    psi0 = qcore.RegisterState.basis(qcore.S, qcore.S, 0, params.n_max)
    psi = qcore.propagate(psi0, params, 0.0, t_gate, method=cfg["method"])
    n_ph = int(cfg["phases"])
    phases = np.linspace(0, 2 * np.pi, n_ph, endpoint=False)
    seeds = stage_seeds(cfg["seed"])
    data = msgate.parity_scan(psi, phases, shots=cfg["shots"], seed=seeds[0],
                              population_shots=cfg["population_shots"])
    try:
        fit = msgate.ml_fit_parity(data, level=cfg["level"])
    except msgate.FitError as exc:
        raise PhysicsFlag(str(exc)) from None
    write_csv(out / "parity.csv", ["phase", "parity"], [data.phases, data.parity_samples])
    pops = qcore.measure_populations(psi)
    summary = {"t_gate": t_gate, "fidelity": fit.fidelity, "amplitude": fit.amplitude,
               "phase": fit.phase, "confidence": list(fit.confidence),
               "fidelity_std": fit.fidelity_std, "p_even": fit.p_even,
               "populations": pops.as_array().tolist(),
               "bell_fidelity_exact": msgate.bell_fidelity(psi)}
    flags = [] if 0 <= fit.fidelity <= 1 else ["fidelity outside [0, 1]"]
    return summary, ["parity.csv"], flags


def cmd_spectrum(cfg, out: Path, threads: int):
    omega = qcore.TWO_PI * cfg["omega_hz"]
    det = _grid(cfg["detunings"], "detunings")
    base = noisekit.servo_bump_psd(cfg["bump_center"], cfg["bump_fwhm"],
                                   cfg["bump_power"] or 1.0,
                                   white_level=noisekit.white_level_for_linewidth(
                                       cfg["white_linewidth_hz"]))
    if cfg["bump_power"] is None:
        base = noisekit.calibrate_bump_power(base, omega, cfg["bump_center"],
                                             cfg["calibration_time"],
                                             cfg["calibration_target"])
    cav = noisekit.CavityParams(cfg["cavity_linewidth"],
                                fsr=cfg["cavity_linewidth"] * 1e5)
    filt = noisekit.cavity_filter(base, cav)
    s = stage_seeds(cfg["seed"])
    r = int(cfg["realizations"])
    raw = noisekit.rabi_spectroscopy(base, omega, cfg["pulse"], det, r, seed=s[0])
    fil = noisekit.rabi_spectroscopy(filt, omega, cfg["pulse"], det, r, seed=s[1])
    write_csv(out / "spectrum.csv",
              ["detuning", "unfiltered", "unfiltered_stderr", "filtered", "filtered_stderr"],
              [det, raw.excitation, raw.stderr, fil.excitation, fil.stderr])
    at = np.argmin(np.abs(det - cfg["bump_center"]))
    summary = {"bump_power_rad2": base.bumps[0].power,
               "transfer_at_bump": float(cav.transfer(cfg["bump_center"])),
               "excitation_at_bump": {"unfiltered": float(raw.excitation[at]),
                                      "filtered": float(fil.excitation[at])}}
    return summary, ["spectrum.csv"], []


def _noise_models(cfg):
    lc, fc = cfg["laser"], cfg["field"]
    laser = noisekit.NoisePsd(
        white_level=noisekit.white_level_for_linewidth(lc["white_linewidth_hz"]),
        flicker_level=lc["flicker_level"],
        static_sigma=seqlab.gaussian_sigma_for_fwhm(lc["gaussian_fwhm_hz"]))
    rms = fc["tone_rms_T"]
    if rms is None:
        rms = seqlab.tune_tone_rms(fc["ramsey_target"], fc["ramsey_target_time"],
                                   fc["tone_hz"], fc["static_sigma_T"])
    lines = (noisekit.Line(fc["tone_hz"], rms),) if rms > 0 else ()
    field = noisekit.NoisePsd(lines=lines, static_sigma=fc["static_sigma_T"])
    return laser, field, rms


def _cmd_sequence(kind):
    def run(cfg, out: Path, threads: int):
        times = _grid(cfg["times"], "times")
        laser, field, rms = _noise_models(cfg)
        phases = np.linspace(0, 2 * np.pi, int(cfg["phases"]), endpoint=False)
        seeds = stage_seeds(cfg["seed"])
        curve = seqlab.contrast_curve(kind, times, N=int(cfg["N"]), laser=laser,
                                      field=field, realizations=int(cfg["realizations"]),
                                      phases=phases, seed=seeds[0], shots=cfg["shots"])
        curve.to_csv(out / "contrast.csv")
        summary = {"tone_rms_T": rms, "contrast": curve.contrast.tolist()}
        flags = []
        try:
            fit = seqlab.fit_contrast(curve, cfg["model"])
        except (seqlab.FitError, ValueError) as exc:
            flags.append(f"fit failed: {exc}")
        else:
            summary.update(model=fit.model, params=fit.params, stderr=fit.stderr,
                           linewidth_hz=fit.linewidth, linewidth_stderr=fit.linewidth_stderr,
                           half_time=fit.half_time, half_time_stderr=fit.half_time_stderr,
                           r_squared=fit.r_squared)
        return summary, ["contrast.csv"], flags
    return run


def cmd_address(cfg, out: Path, threads: int):
    kx = tuple(cfg["k_dot_x"])
    if cfg["omega_c_hz"] is not None:
        omega_c = qcore.TWO_PI * cfg["omega_c_hz"]
    else:
        moving = max(kx)
        if moving <= 0:
            raise ConfigError("k_dot_x: need a displaced ion to derive omega_c")
        omega_c = qcore.TWO_PI * cfg["omega_mm_hz"] / j1(moving)
    null = [i for i, x in enumerate(kx) if x == 0]
    try:
        params = addressing.AddressingParams(omega_c, kx, rabi_jitter=cfg["rabi_jitter"],
                                             null_ion=null[0] if len(null) == 1 else None)
        rates = params.rates(cfg["drive"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    seeds = stage_seeds(cfg["seed"])
    trace = addressing.simulate_register_flops(params, cfg["drive"], cfg["duration"],
                                               shots=cfg["shots"], seed=seeds[0],
                                               points=int(cfg["points"]))
    trace.to_csv(out / "trace.csv")
    eps = np.geomspace(*cfg["composite_epsilons"][:2], int(cfg["composite_epsilons"][2]))
    plain, comp = addressing.composite_pi(eps)
    write_csv(out / "composite.csv", ["epsilon", "plain", "composite"], [eps, plain, comp])
    fast = float(np.max(rates))
    summary = {"omega_c_hz": omega_c / qcore.TWO_PI,
               "rates_hz": (rates / qcore.TWO_PI).tolist(),
               "pi_time": addressing.pi_time(fast) if fast > 0 else None,
               "max_p0": float(np.max(trace.p0)),
               "max_p1_plus_p2_error": float(np.max(np.abs(trace.p1 + trace.p2 - 1)))}
    return summary, ["trace.csv", "composite.csv"], []


def _detection(cfg) -> readout.DetectionModel:
    try:
        return readout.DetectionModel(cfg["lambda_bright"], cfg["lambda_dark"],
                                      cfg["window"], decay_correction=cfg["decay_correction"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_readout_sim(cfg, out: Path, threads: int):
    model = _detection(cfg)
    try:
        pops = qcore.Populations(*map(float, cfg["populations"]))
        hist = readout.simulate_histogram(pops, model, int(cfg["shots"]),
                                          stage_seeds(cfg["seed"])[0])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"populations: {exc}") from None
    hist.to_csv(out / "histogram.csv")
    return {"shots": hist.shots, "mean_counts": hist.mean(),
            "model": model.to_dict()}, ["histogram.csv"], []


def _load_hist(path, where):
    if path is None:
        raise ConfigError(f"{where}: a histogram CSV path is required")
    try:
        return readout.PhotonHistogram.from_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def cmd_readout_fit(cfg, out: Path, threads: int):
    cal = cfg["calibration"]
    if cal["dark"] is not None or cal["bright"] is not None:
        model = readout.calibrate_model(_load_hist(cal["dark"], "calibration.dark"),
                                        _load_hist(cal["bright"], "calibration.bright"),
                                        cfg["window"],
                                        decay_correction=cfg["decay_correction"])
    else:
        model = _detection(cfg)
    hist = _load_hist(cfg["histogram"], "histogram")
    res = readout.infer_populations(hist, model)
    p = res.populations.as_array()
    write_csv(out / "populations.csv", ["k", "p", "stderr"], [np.arange(3), p, res.stderr])
    flags = ["low-confidence inference: " + "; ".join(res.notes)] if res.low_confidence else []
    return {**res.to_dict(), "model": model.to_dict()}, ["populations.csv"], flags


def cmd_freq_table(cfg, out: Path, threads: int):
    plan = freqplan.FrequencyPlan.standard(cfg["carrier"], cfg["base"], cfg["f1"],
                                           cfg["trap_drive"], f2=cfg["f2"])
    if cfg["ms"]["trap_frequency"] is not None:
        plan.configure_ms(cfg["ms"]["trap_frequency"], cfg["ms"]["detuning"])
    rows = plan.table()
    write_csv(out / "table.csv", ["path", "sideband", "offset"],
              [[r["path"] for r in rows], [r["sideband"] for r in rows],
               [r["offset"] for r in rows]])
    (out / "plan.json").write_text(plan.to_json() + "\n")
    print(plan.format_table())
    summary = {"plan": plan.to_dict(),
               "carrier_mm_switch": plan.pulse_frequency("mm") - plan.pulse_frequency("carrier")}
    flags = plan.check()
    drift = cfg["drift"]
    if drift["points"]:
        try:
            model = freqplan.DriftModel(drift["points"], drift["max_slope"],
                                        drift["max_curvature"])
            at = drift["at"] if drift["at"] is not None else float(model.times[-1])
            corr = freqplan.compensate_drift(model, at)
        except ValueError as exc:
            raise ConfigError(f"drift: {exc}") from None
        summary["drift"] = corr.__dict__
        print(f"drift at t={at:g} s: offset {corr.offset:.3f} Hz, "
              f"base correction {corr.base_correction:.3f} Hz"
              + (" (extrapolated)" if corr.extrapolated else ""))
    return summary, ["table.csv", "plan.json"], flags


def cmd_calibrate_lightshift(cfg, out: Path, threads: int):
    params = _gate_params(cfg)
    times = _grid(cfg["times"], "times")
    deltas = _grid(cfg["deltas"], "deltas")
    calc = msgate.analytic_map(params, times, deltas)
    seeds = stage_seeds(cfg["seed"])
    if cfg["measured"] is not None:
        try:
            meas = msgate.PopulationMap.from_csv(cfg["measured"])
        except (OSError, ValueError) as exc:
            raise ConfigError(f"measured: {exc}") from None
    else:
        m = msgate.analytic_map(params, times, deltas - cfg["shift_hz"])
        meas = msgate.PopulationMap("time", times, "delta", deltas, m.p0, m.p1, m.p2)
        if cfg["shots"] is not None:
            rng = np.random.default_rng(seeds[0])
            p = np.clip(meas.populations(), 0, None)
            p /= p.sum(axis=-1, keepdims=True)
            c = rng.multinomial(int(cfg["shots"]), p) / int(cfg["shots"])
            meas = msgate.PopulationMap("time", times, "delta", deltas,
                                        c[..., 0], c[..., 1], c[..., 2])
        meas.to_csv(out / "measured.csv")
    calc.to_csv(out / "calculated.csv")
    try:
        offset = msgate.register_maps(meas, calc, "delta")
    except msgate.RegistrationError as exc:
        raise PhysicsFlag(str(exc)) from None
    step = float(np.median(np.diff(deltas)))
    files = ["calculated.csv"] + (["measured.csv"] if cfg["measured"] is None else [])
    return {"offset_hz": offset, "grid_step_hz": step,
            "synthetic_shift_hz": cfg["shift_hz"] if cfg["measured"] is None else None
            }, files, []


HANDLERS = {
    "ms-scan": cmd_ms_scan,
    "ms-parity": cmd_ms_parity,
    "spectrum": cmd_spectrum,
    "ramsey": _cmd_sequence("ramsey"),
    "mfdd": _cmd_sequence("mfdd"),
    "echo": _cmd_sequence("echo"),
    "address": cmd_address,
    "readout-sim": cmd_readout_sim,
    "readout-fit": cmd_readout_fit,
    "freq-table": cmd_freq_table,
    "calibrate-lightshift": cmd_calibrate_lightshift,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="iongates",
                                 description="Two-ion optical-qubit gate simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration value (repeatable)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="root random seed")
        p.add_argument("--threads", type=int, default=1)
    return ap


def run(command: str, config=None, overrides=(), out=None, seed=None,
        threads: int = 1) -> int:
    """Execute one command and return its exit code."""
    try:
        cfg = resolve_config(command, config, overrides, seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out if out is not None else f"run-{command}")
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "config.snapshot.json", cfg)
    flags = []
    try:
        summary, files, flags = HANDLERS[command](cfg, out, max(1, threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsFlag, qcore.CutoffError, qcore.PropagationError) as exc:
        summary, files, flags = {}, [], [f"{type(exc).__name__}: {exc}"]
    status = "flagged" if flags else "ok"
    write_json(out / "run.json", {"command": command, "seed": cfg["seed"],
                                  "status": status, "flags": flags,
                                  "outputs": files, "results": summary})
    for f in flags:
        print(f"flag: {f}", file=sys.stderr)
    return EXIT_PHYSICS if flags else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.set, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
