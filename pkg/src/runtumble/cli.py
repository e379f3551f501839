#!/usr/bin/env python3
"""Batch front end: config parsing, subcommand dispatch, file emission.

Subcommands
    simulate-two-state   switching-duration sampler of the two-state model
    simulate-one-state   stopping-time sampler of the one-state model
    simulate-ibm         position ensemble of the individual-based model
    stats                MSD / survival / window fits / rescaled PDFs from
                         files written by the simulate subcommands
    oracle-sweep         exact transfer values vs. their scaling limits
    scaling-report       exponent extraction from characteristic lengths
    reproduce            chained simulate -> stats -> scaling for a named
                         figure or table target

Configuration is a flat INI file with a [run] section (seed, workers,
out, preset) and one section per subcommand; command-line flags override
file values.  Unknown keys and out-of-range values are rejected with the
offending key named.  Exit codes: 0 success, 2 config error, 3 numerical
guard tripped.

Environment: RUNTUMBLE_OUTPUT_DIR sets the default output directory,
RUNTUMBLE_WORKERS the default worker count.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
import types
from dataclasses import dataclass

import numpy as np

from . import fileio, oracle, scaling, sde, stats
from .ibm import IbmParams, log_observation_times, run_ensemble
from .models import (
    FLIP_EXACT,
    FLIP_RATE_EXP,
    RUN_TIME,
    STOPPING_TIME,
    DurationSamples,
    OneStateParams,
    TwoStateParams,
    simulate_one_state,
    simulate_two_state,
)

__all__ = [
    "ConfigError",
    "NumericalGuardError",
    "RunConfig",
    "parse_config",
    "emit_config",
    "dispatch",
    "main",
    "PRESETS",
    "SCHEMAS",
]

ENV_OUTPUT_DIR = "RUNTUMBLE_OUTPUT_DIR"
ENV_WORKERS = "RUNTUMBLE_WORKERS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3


class ConfigError(Exception):
    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
        self.message = message


class NumericalGuardError(Exception):
    pass


# --------------------------------------------------------------- schema


@dataclass(frozen=True)
class Field:
    ftype: str  # float | int | bool | str | floatlist
    default: object = None
    help: str = ""
    lo: float | None = None  # inclusive unless lo_open
    hi: float | None = None
    lo_open: bool = False
    allow_inf: bool = False
    choices: tuple = ()
    required: bool = False


def _parse_float(key, text, f):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}", key) from None
    if math.isnan(value):
        raise ConfigError(f"{key}: NaN is not allowed", key)
    if math.isinf(value) and not f.allow_inf:
        raise ConfigError(f"{key}: must be finite", key)
    return value


def _check_range(key, value, f):
    if f.lo is not None:
        if f.lo_open and not value > f.lo:
            raise ConfigError(f"{key}: must be > {f.lo}, got {value!r}", key)
        if not f.lo_open and not value >= f.lo:
            raise ConfigError(f"{key}: must be >= {f.lo}, got {value!r}", key)
    if f.hi is not None and not value <= f.hi:
        raise ConfigError(f"{key}: must be <= {f.hi}, got {value!r}", key)


def _coerce(key, raw, f):
    """Parse a raw string (or pass through a typed value) against a Field."""
    if f.ftype == "float":
        value = _parse_float(key, raw, f) if isinstance(raw, str) else float(raw)
        if math.isnan(value):
            raise ConfigError(f"{key}: NaN is not allowed", key)
        if math.isinf(value) and not f.allow_inf:
            raise ConfigError(f"{key}: must be finite", key)
        _check_range(key, value, f)
        return value
    if f.ftype == "int":
        try:
            value = int(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: not an integer: {raw!r}", key) from None
        _check_range(key, value, f)
        if f.choices and value not in f.choices:
            raise ConfigError(f"{key}: must be one of {f.choices}, got {value!r}", key)
        return value
    if f.ftype == "bool":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("true", "1", "yes", "on"):
            return True
        if text in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{key}: not a boolean: {raw!r}", key)
    if f.ftype == "str":
        value = str(raw)
        if f.choices and value not in f.choices:
            raise ConfigError(f"{key}: must be one of {f.choices}, got {value!r}", key)
        return value
    if f.ftype == "floatlist":
        if isinstance(raw, (tuple, list)):
            items = [str(v) for v in raw]
        else:
            items = [p for p in str(raw).split(",") if p.strip()]
        values = []
        for item in items:
            v = _parse_float(key, item.strip(), f)
            _check_range(key, v, f)
            values.append(v)
        return tuple(values)
    raise AssertionError(f"unhandled field type {f.ftype}")


SQRT2 = math.sqrt(2.0)

SCHEMAS = {
    "simulate-two-state": {
        "alpha1": Field("float", 10.0, "CCW->CW rate exponent gain"),
        "alpha2": Field("float", -2.0, "CW->CCW rate exponent gain"),
        "t0": Field("float", 300.0, "CCW->CW base time", lo=0.0, lo_open=True),
        "t1": Field("float", 30.0, "CW->CCW base time", lo=0.0, lo_open=True),
        "y_bar": Field("float", 5.0, "rate normalization level", lo=0.0, lo_open=True),
        "t_m": Field("float", 6000.0, "memory (relaxation) time", lo=0.0, lo_open=True,
                     allow_inf=True),
        "sigma": Field("float", 0.456, "noise amplitude", lo=0.0),
        "dtau": Field("float", 0.1, "time step", lo=0.0, lo_open=True),
        "horizon": Field("float", 1e5, "simulated horizon", lo=0.0, lo_open=True),
        "n_particles": Field("int", 100, "trajectories", lo=1),
        "flip_mode": Field("str", FLIP_RATE_EXP, "switch acceptance rule",
                           choices=(FLIP_RATE_EXP, FLIP_EXACT)),
        "clamp_fraction_max": Field("float", 1e-3,
                                    "guard: max fraction of clamped rate evaluations",
                                    lo=0.0),
    },
    "simulate-one-state": {
        "t_m": Field("float", 6000.0, "memory (relaxation) time", lo=0.0, lo_open=True,
                     allow_inf=True),
        "sigma": Field("float", 0.456, "noise amplitude", lo=0.0),
        "dtau": Field("float", 0.1, "time step", lo=0.0, lo_open=True),
        "horizon": Field("float", 1e5, "simulated horizon", lo=0.0, lo_open=True),
        "n_particles": Field("int", 100, "trajectories", lo=1),
        "rate": Field("str", "indicator", "clock rate choice",
                      choices=("indicator", "one")),
        "drift": Field("str", sde.SIGN_STEP, "drift kind",
                       choices=(sde.SIGN_STEP, sde.OU)),
        "m0": Field("float", 0.0, "initial internal state"),
    },
    "simulate-ibm": {
        "dimension": Field("int", 1, "spatial dimension", choices=(1, 2, 3)),
        "v0": Field("float", 0.02, "speed", lo=0.0, lo_open=True),
        "t_m": Field("float", math.inf, "memory (relaxation) time", lo=0.0,
                     lo_open=True, allow_inf=True),
        "sigma": Field("float", SQRT2, "noise amplitude", lo=0.0),
        "dtau": Field("float", 1.0, "time step", lo=0.0, lo_open=True),
        "horizon": Field("float", 1e4, "simulated horizon", lo=0.0, lo_open=True),
        "n_particles": Field("int", 500, "particles", lo=1),
        "per_decade": Field("int", 32, "observation times per decade", lo=1),
        "observation_times": Field("floatlist", (),
                                   "explicit observation times (default: log grid)",
                                   lo=0.0, lo_open=True),
        "record_firing_intervals": Field("bool", False,
                                         "record clock firings instead of direction changes"),
    },
    "stats": {
        "input": Field("str", "", "directory written by a simulate subcommand",
                       required=True),
        "op": Field("str", "", "operation", required=True,
                    choices=("msd", "survival", "fit-loglog", "fit-semilog",
                             "rescaled-pdf")),
        "source": Field("str", "", "input CSV (relative to input dir) for "
                                   "survival and fit operations"),
        "window": Field("floatlist", (), "fit window lo,hi"),
        "per_decade": Field("int", 32, "survival grid density", lo=1),
        "kaplan_meier": Field("bool", False, "product-limit estimator"),
        "t_anchor": Field("float", 0.0, "anchor time for rescaled PDFs", lo=0.0),
        "dt_list": Field("floatlist", (), "lags for rescaled PDFs"),
        "beta": Field("float", 1.0, "rescaling exponent", lo=0.0, lo_open=True, hi=1.0),
        "bins": Field("int", 0, "histogram bins (0 = automatic)", lo=0),
    },
    "oracle-sweep": {
        "gamma": Field("float", 1.0, "memory exponent"),
        "mu": Field("float", 0.0, "time-scaling exponent", lo=0.0, hi=1.0),
        "s": Field("float", 1.0, "Laplace variable", lo=0.0, lo_open=True),
        "xi": Field("float", 1.0, "Fourier variable"),
        "eps": Field("floatlist", (1e-2, 1e-3, 1e-4), "eps sweep values",
                     lo=0.0, lo_open=True, hi=1.0),
        "d": Field("int", 1, "spatial dimension", choices=(1, 2, 3)),
        "profile_times": Field("floatlist", (), "emit the 1-D profile at these times",
                               lo=0.0, lo_open=True),
        "profile_points": Field("int", 1600, "profile grid points per time", lo=16),
    },
    "scaling-report": {
        "lengths": Field("str", "", "CSV with columns t_m,l1,l2", required=True),
        "t_i": Field("float", 0.0, "interval start", lo=0.0),
        "t_e1": Field("float", 0.0, "first interval end", lo=0.0, lo_open=True,
                      required=True),
        "t_e2": Field("float", 0.0, "second interval end", lo=0.0, lo_open=True,
                      required=True),
        "t_lambda": Field("float", 1.0, "characteristic tumbling time", lo=0.0,
                          lo_open=True),
        "delta_gamma": Field("float", 0.05, "classification band around gamma = 1/2",
                             lo=0.0),
        "delta_mu": Field("float", 0.2, "classification band around mu", lo=0.0),
    },
    "reproduce": {
        "target": Field("str", "", "named figure or table", required=True,
                        choices=("fig1", "fig6", "fig7a", "fig9", "table1", "table2")),
        "full": Field("bool", False, "full-scale run instead of desk scale"),
        "n_particles": Field("int", 0, "override particle count (0 = target default)",
                             lo=0),
    },
}

RUN_KEYS = ("subcommand", "seed", "workers", "out", "preset")

PRESETS = {
    "fig1-two-state": ("simulate-two-state", {
        "alpha1": 10.0, "alpha2": -2.0, "t0": 300.0, "t1": 30.0, "y_bar": 5.0,
        "t_m": 6000.0, "sigma": 0.456, "dtau": 0.1, "horizon": 1e5,
        "n_particles": 100,
    }),
    "fig6-one-state": ("simulate-one-state", {
        "t_m": 6000.0, "sigma": 0.456, "dtau": 0.1, "horizon": 1e5,
        "n_particles": 100, "rate": "indicator", "drift": sde.SIGN_STEP,
    }),
}
for _tag, _tm in [("inf", math.inf), ("1e-2", 1e-2), ("1", 1.0), ("10", 10.0),
                  ("100", 100.0), ("1000", 1000.0)]:
    PRESETS[f"fig7a-Tm-{_tag}"] = ("simulate-ibm", {
        "t_m": _tm, "sigma": SQRT2, "v0": 0.02, "dtau": 1.0, "horizon": 1e6,
        "n_particles": 1000, "dimension": 1,
    })


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    out_dir: str
    seed: int = 1
    workers: int = 1
    preset: str = ""


# ------------------------------------------------------------- parsing


def _default_out(subcommand):
    root = os.environ.get(ENV_OUTPUT_DIR, "out")
    return os.path.join(root, subcommand)


def _default_workers():
    raw = os.environ.get(ENV_WORKERS, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{ENV_WORKERS}: not an integer: {raw!r}", "workers") from None


def parse_config(subcommand, config_path=None, overrides=None):
    """Merge defaults, preset, config file and flag overrides.

    Precedence (lowest to highest): schema defaults, preset values, file
    section values, explicit overrides.  Unknown keys are rejected.
    """
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}", "subcommand")
    schema = SCHEMAS[subcommand]
    overrides = dict(overrides or {})

    file_run = {}
    file_params = {}
    if config_path is not None:
        if not os.path.exists(config_path):
            raise ConfigError(f"config file not found: {config_path}", "config")
        parser = configparser.RawConfigParser()
        parser.optionxform = str
        try:
            parser.read(config_path)
        except configparser.Error as exc:
            raise ConfigError(f"config file malformed: {exc}", "config") from None
        for section in parser.sections():
            if section == "run":
                for key, value in parser.items(section):
                    if key not in RUN_KEYS:
                        raise ConfigError(f"[run] unknown key {key!r}", key)
                    file_run[key] = value
            elif section == subcommand:
                for key, value in parser.items(section):
                    if key not in schema:
                        raise ConfigError(
                            f"[{section}] unknown key {key!r}", key)
                    file_params[key] = value
            elif section in SCHEMAS:
                continue  # section for another subcommand: ignored
            else:
                raise ConfigError(f"unknown section [{section}]", section)
        if "subcommand" in file_run and file_run["subcommand"] != subcommand:
            raise ConfigError(
                f"config file is for {file_run['subcommand']!r}, "
                f"not {subcommand!r}", "subcommand")

    preset = str(overrides.pop("preset", file_run.get("preset", "")) or "")
    params = {key: f.default for key, f in schema.items()}
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (have: "
                              f"{', '.join(sorted(PRESETS))})", "preset")
        preset_sub, preset_params = PRESETS[preset]
        if preset_sub != subcommand:
            raise ConfigError(
                f"preset {preset!r} belongs to {preset_sub}, not {subcommand}",
                "preset")
        params.update(preset_params)
    for key, raw in file_params.items():
        params[key] = _coerce(key, raw, schema[key])

    try:
        seed = int(file_run.get("seed", 1))
        workers = int(file_run.get("workers", _default_workers()))
    except ValueError as exc:
        raise ConfigError(f"[run] {exc}", "run") from None
    out_dir = file_run.get("out", _default_out(subcommand))

    for key, raw in overrides.items():
        if key == "seed":
            seed = int(raw)
        elif key == "workers":
            workers = int(raw)
        elif key == "out":
            out_dir = str(raw)
        elif key in schema:
            params[key] = _coerce(key, raw, schema[key])
        else:
            raise ConfigError(f"unknown key {key!r} for {subcommand}", key)

    for key, f in schema.items():
        if f.required and (params[key] in ("", ()) or params[key] is None):
            raise ConfigError(f"missing required key {key!r}", key)
        params[key] = _coerce(key, params[key], f)
    if workers < 1:
        raise ConfigError("workers must be >= 1", "workers")
    return RunConfig(subcommand=subcommand, params=params, out_dir=out_dir,
                     seed=seed, workers=workers, preset=preset)


def emit_config(config, path):
    """Write a config file that parse_config reads back identically."""
    parser = configparser.RawConfigParser()
    parser.optionxform = str
    parser.add_section("run")
    parser.set("run", "subcommand", config.subcommand)
    parser.set("run", "seed", str(config.seed))
    parser.set("run", "workers", str(config.workers))
    parser.set("run", "out", config.out_dir)
    if config.preset:
        parser.set("run", "preset", config.preset)
    parser.add_section(config.subcommand)
    for key, value in config.params.items():
        if isinstance(value, tuple):
            text = ",".join(fileio.format_float(float(v)) for v in value)
        elif isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = fileio.format_float(value)
        else:
            text = str(value)
        parser.set(config.subcommand, key, text)
    with open(path, "w") as fh:
        parser.write(fh)
    return path


def _config_dict(config):
    out = {"subcommand": config.subcommand, "seed": config.seed,
           "workers": config.workers, "out": config.out_dir}
    if config.preset:
        out["preset"] = config.preset
    params = {}
    for key, value in config.params.items():
        if isinstance(value, tuple):
            params[key] = [_jsonable(v) for v in value]
        else:
            params[key] = _jsonable(value)
    out["params"] = params
    return out


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


# ------------------------------------------------------------ handlers


def _progress_printer(n_total):
    stride = max(1, n_total // 10)

    def progress(done, total):
        if done % stride == 0 or done == total:
            print(f"progress: {done}/{total} particles", file=sys.stderr)

    return progress


def _write_durations(out_dir, name, durations):
    path = os.path.join(out_dir, name)
    rows = [(durations.kind, float(v)) for v in durations.samples]
    fileio.write_csv(path, ("kind", "duration"), rows)
    files = [path]
    if durations.censored_samples is not None and durations.censored_count:
        cpath = os.path.join(out_dir, name.replace(".csv", "_censored.csv"))
        fileio.write_csv(cpath, ("kind", "duration"),
                         [(durations.kind, float(v)) for v in durations.censored_samples])
        files.append(cpath)
    return files


def _flat_params(config):
    return {k: _jsonable(v if not isinstance(v, tuple) else list(v))
            for k, v in config.params.items()}


def cmd_simulate_two_state(config):
    p = config.params
    params = TwoStateParams(
        alpha1=p["alpha1"], alpha2=p["alpha2"], t0=p["t0"], t1=p["t1"],
        y_bar=p["y_bar"], t_m=p["t_m"], sigma=p["sigma"], dtau=p["dtau"],
        horizon=p["horizon"],
    )
    result = simulate_two_state(params, p["n_particles"], config.seed,
                                flip_mode=p["flip_mode"])
    total_evals = p["n_particles"] * params.n_steps
    if result.clamp_count > p["clamp_fraction_max"] * total_evals:
        raise NumericalGuardError(
            f"rate clamped on {result.clamp_count} of {total_evals} evaluations "
            f"(limit fraction {p['clamp_fraction_max']:g})")

    files = []
    files += _write_durations(config.out_dir, "durations_ccw.csv", result.ccw)
    files += _write_durations(config.out_dir, "durations_cw.csv", result.cw)
    if result.first_interval_samples.size:
        path = os.path.join(config.out_dir, "first_intervals.csv")
        fileio.write_csv(path, ("kind", "duration"),
                         [("first-interval", float(v))
                          for v in result.first_interval_samples])
        files.append(path)
    hist = result.histogram
    path = os.path.join(config.out_dir, "histogram.csv")
    fileio.write_csv(
        path,
        ("bin_left", "bin_right", "ccw_count", "cw_count"),
        [(hist.bin_edges[i], hist.bin_edges[i + 1],
          int(hist.ccw_counts[i]), int(hist.cw_counts[i]))
         for i in range(len(hist.ccw_counts))],
    )
    files.append(path)
    sidecar = {
        "parameters": _flat_params(config),
        "seed": config.seed,
        "mode": result.flip_mode,
        "censored_count": {"ccw": result.ccw.censored_count,
                           "cw": result.cw.censored_count},
        "first_intervals_excluded": result.first_intervals_excluded,
        "clamp_count": result.clamp_count,
        "histogram_outside": {"ccw": hist.ccw_outside, "cw": hist.cw_outside},
        "horizon": _jsonable(params.horizon),
        "n_particles": p["n_particles"],
    }
    files.append(fileio.write_json(os.path.join(config.out_dir, "durations.json"),
                                   sidecar))
    return files


def _one_state_params(p):
    inverse_time = 0.0 if math.isinf(p["t_m"]) else 1.0 / p["t_m"]
    drift = sde.DriftSpec(kind=p["drift"], inverse_time=inverse_time)
    return OneStateParams(drift=drift, sigma=p["sigma"], dtau=p["dtau"],
                          horizon=p["horizon"])


def cmd_simulate_one_state(config):
    p = config.params
    params = _one_state_params(p)
    durations = simulate_one_state(params, p["n_particles"], config.seed,
                                   rate=p["rate"], m0=p["m0"])
    files = _write_durations(config.out_dir, "durations.csv", durations)
    sidecar = {
        "parameters": _flat_params(config),
        "seed": config.seed,
        "mode": p["rate"],
        "censored_count": durations.censored_count,
        "horizon": _jsonable(params.horizon),
        "n_particles": p["n_particles"],
    }
    files.append(fileio.write_json(os.path.join(config.out_dir, "durations.json"),
                                   sidecar))
    return files


def _ibm_params(config):
    p = config.params
    internal = OneStateParams(
        drift=sde.DriftSpec(
            kind=sde.SIGN_STEP,
            inverse_time=0.0 if math.isinf(p["t_m"]) else 1.0 / p["t_m"],
        ),
        sigma=p["sigma"], dtau=p["dtau"], horizon=p["horizon"],
    )
    obs = p["observation_times"] or log_observation_times(
        p["dtau"], p["horizon"], p["per_decade"])
    return IbmParams(
        dimension=p["dimension"], v0=p["v0"], internal=internal,
        n_particles=p["n_particles"], observation_times=tuple(obs),
        master_seed=config.seed,
        record_firing_intervals=p["record_firing_intervals"],
    )


def cmd_simulate_ibm(config):
    params = _ibm_params(config)
    record = run_ensemble(params, workers=config.workers,
                          progress=_progress_printer(params.n_particles))
    d = params.dimension
    coord_names = ["x1", "x2", "x3"][:d]
    files = []

    path = os.path.join(config.out_dir, "initial_positions.csv")
    fileio.write_csv(path, ["particle_id"] + coord_names,
                     [[i] + [float(x) for x in record.initial_positions[i]]
                      for i in range(params.n_particles)])
    files.append(path)

    for j, t in enumerate(record.observation_times):
        path = os.path.join(config.out_dir, f"positions_{j:04d}.csv")
        snap = record.snapshots[j]
        fileio.write_csv(path, ["particle_id"] + coord_names,
                         [[i] + [float(x) for x in snap[i]]
                          for i in range(params.n_particles)])
        files.append(path)

    files += _write_durations(config.out_dir, "run_times.csv", record.run_times)

    manifest = {
        "parameters": _flat_params(config),
        "master_seed": config.seed,
        "build": fileio.git_describe(),
        "wall_time": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "observation_times": [float(t) for t in record.observation_times],
        "dimension": d,
        "n_particles": params.n_particles,
        "firing_count": int(record.firing_count),
        "run_time_kind": record.run_times.kind,
        "censored_count": record.run_times.censored_count,
        "horizon": _jsonable(params.internal.horizon),
    }
    files.append(fileio.write_json(os.path.join(config.out_dir, "ensemble.json"),
                                   manifest))
    return files


def _load_ensemble(input_dir):
    meta_path = os.path.join(input_dir, "ensemble.json")
    if not os.path.exists(meta_path):
        raise ConfigError(f"{input_dir}: no ensemble.json (not a simulate-ibm "
                          f"output directory)", "input")
    meta = fileio.read_json(meta_path)
    times = np.asarray(meta["observation_times"], dtype=float)
    d = int(meta["dimension"])
    n = int(meta["n_particles"])

    def read_positions(path):
        header, rows = fileio.read_csv(path)
        if len(header) != d + 1 or header[0] != "particle_id":
            raise ConfigError(f"{path}: unexpected columns {header}", "input")
        out = np.empty((n, d))
        for row in rows:
            out[int(row[0])] = [float(v) for v in row[1:]]
        return out

    initial = read_positions(os.path.join(input_dir, "initial_positions.csv"))
    snaps = np.empty((times.size, n, d))
    for j in range(times.size):
        snaps[j] = read_positions(os.path.join(input_dir, f"positions_{j:04d}.csv"))
    return types.SimpleNamespace(
        observation_times=times, snapshots=snaps, initial_positions=initial,
        meta=meta,
    )


def _load_durations_csv(input_dir, source):
    path = os.path.join(input_dir, source)
    if not os.path.exists(path):
        raise ConfigError(f"durations file not found: {path}", "source")
    header, rows = fileio.read_csv(path)
    if header != ["kind", "duration"]:
        raise ConfigError(f"{path}: unexpected columns {header}", "source")
    kind = rows[0][0] if rows else RUN_TIME
    samples = np.array([float(r[1]) for r in rows])
    cpath = path.replace(".csv", "_censored.csv")
    censored = None
    if os.path.exists(cpath):
        _, crows = fileio.read_csv(cpath)
        censored = np.array([float(r[1]) for r in crows])
    return kind, samples, censored


def _default_duration_source(input_dir):
    for name in ("run_times.csv", "durations.csv", "durations_ccw.csv"):
        if os.path.exists(os.path.join(input_dir, name)):
            return name
    raise ConfigError(f"{input_dir}: no durations CSV found; pass source=",
                      "source")


def cmd_stats(config):
    p = config.params
    input_dir = p["input"]
    if not os.path.isdir(input_dir):
        raise ConfigError(f"input directory not found: {input_dir}", "input")
    op = p["op"]
    files = []
    sidecar = {"operation": op, "input": input_dir, "parameters": _flat_params(config)}

    if op == "msd":
        record = _load_ensemble(input_dir)
        curve = stats.msd(record)
        path = os.path.join(config.out_dir, "msd.csv")
        fileio.write_csv(path, ("time", "msd"),
                         zip(curve.times.tolist(), curve.values.tolist()))
        files.append(path)
        sidecar["n_particles"] = curve.n_particles
        files.append(fileio.write_json(os.path.join(config.out_dir, "msd.json"),
                                       sidecar))
        return files

    if op == "survival":
        source = p["source"] or _default_duration_source(input_dir)
        kind, samples, censored = _load_durations_csv(input_dir, source)
        if p["kaplan_meier"] and censored is not None:
            meta = {}
            for name in ("ensemble.json", "durations.json"):
                mp = os.path.join(input_dir, name)
                if os.path.exists(mp):
                    meta = fileio.read_json(mp)
                    break
            horizon = float(meta.get("horizon", max(samples.max(), censored.max())))
            wrapped = DurationSamples(
                kind=kind if kind in (RUN_TIME, STOPPING_TIME) else RUN_TIME,
                samples=samples, horizon=horizon,
                n_particles=int(meta.get("n_particles", 1)),
                censored_count=censored.size, censored_samples=censored,
            )
            curve = stats.survival_curve(wrapped, per_decade=p["per_decade"],
                                         kaplan_meier=True)
        else:
            curve = stats.survival_curve(samples, per_decade=p["per_decade"],
                                         kaplan_meier=False)
        path = os.path.join(config.out_dir, "survival.csv")
        fileio.write_csv(path, ("threshold", "probability"),
                         zip(curve.thresholds.tolist(), curve.probabilities.tolist()))
        files.append(path)
        sidecar.update({"source": source, "n_samples": int(curve.n_samples)})
        files.append(fileio.write_json(os.path.join(config.out_dir, "survival.json"),
                                       sidecar))
        return files

    if op in ("fit-loglog", "fit-semilog"):
        if len(p["window"]) != 2:
            raise ConfigError("window must be two values: lo,hi", "window")
        source = p["source"]
        if not source:
            raise ConfigError("fit operations need source=<curve CSV>", "source")
        path = os.path.join(input_dir, source)
        if not os.path.exists(path):
            raise ConfigError(f"curve file not found: {path}", "source")
        header, rows = fileio.read_csv(path)
        if len(header) != 2:
            raise ConfigError(f"{path}: expected a two-column curve CSV, got "
                              f"{header}", "source")
        x = np.array([float(r[0]) for r in rows])
        y = np.array([float(r[1]) for r in rows])
        fit_fn = stats.fit_loglog if op == "fit-loglog" else stats.fit_semilog
        fit = fit_fn(x, y, window=tuple(p["window"]))
        out = {
            "operation": op, "source": source, "input": input_dir,
            "slope": fit.slope, "intercept": fit.intercept,
            "window": [fit.window[0], fit.window[1]],
            "residual_rms": fit.residual_rms, "n_points": fit.n_points,
        }
        name = "fit_loglog.json" if op == "fit-loglog" else "fit_semilog.json"
        files.append(fileio.write_json(os.path.join(config.out_dir, name), out))
        return files

    # rescaled-pdf
    if not p["dt_list"]:
        raise ConfigError("rescaled-pdf needs dt_list", "dt_list")
    if p["t_anchor"] <= 0.0:
        raise ConfigError("rescaled-pdf needs t_anchor > 0", "t_anchor")
    record = _load_ensemble(input_dir)
    pdfs = stats.rescaled_displacement_pdf(
        record, p["t_anchor"], list(p["dt_list"]), p["beta"],
        bins=p["bins"] or None)
    path = os.path.join(config.out_dir, "rescaled_pdf.csv")
    rows = []
    for pdf in pdfs:
        edges = pdf.bin_edges
        for i in range(len(pdf.density)):
            rows.append((pdf.dt, edges[i], edges[i + 1], pdf.density[i]))
    fileio.write_csv(path, ("dt", "bin_left", "bin_right", "density"), rows)
    files.append(path)
    sidecar.update({"t_anchor": p["t_anchor"], "beta": p["beta"]})
    files.append(fileio.write_json(os.path.join(config.out_dir, "rescaled_pdf.json"),
                                   sidecar))
    return files


def cmd_oracle_sweep(config):
    p = config.params
    files = []
    try:
        if p["mu"] not in (0.0, 1.0):
            raise ConfigError("sweep limits are defined for mu = 0 or mu = 1",
                              "mu")
        rows = oracle.convergence_sweep(p["gamma"], p["mu"], p["s"], p["xi"],
                                        list(p["eps"]), d=p["d"])
        header = ("eps", "gamma", "mu", "s", "xi", "d", "transfer_re",
                  "transfer_im", "limit_re", "limit_im", "abs_error")
        path = os.path.join(config.out_dir, "sweep.csv")
        fileio.write_csv(path, header, [[row[k] for k in header] for row in rows])
        files.append(path)

        if p["profile_times"]:
            m = p["profile_points"]
            theta = (np.arange(m) + 0.5) * math.pi / m - 0.5 * math.pi
            prows = []
            for t in p["profile_times"]:
                x = t * np.sin(theta)
                dens = oracle.ballistic_profile_1d(x, t)
                prows += [(float(t), float(xi), float(di))
                          for xi, di in zip(x, dens)]
            ppath = os.path.join(config.out_dir, "profile.csv")
            fileio.write_csv(ppath, ("t", "x", "density"), prows)
            files.append(ppath)
    except oracle.OracleError as exc:
        raise NumericalGuardError(str(exc)) from exc

    sidecar = {"operation": "oracle-sweep", "parameters": _flat_params(config)}
    files.append(fileio.write_json(os.path.join(config.out_dir, "sweep.json"),
                                   sidecar))
    return files


def cmd_scaling_report(config):
    p = config.params
    window = scaling.ScalingWindow(t_i=p["t_i"], t_e1=p["t_e1"], t_e2=p["t_e2"],
                                   t_lambda=p["t_lambda"])
    tol = scaling.ClassifyTolerances(delta_gamma=p["delta_gamma"],
                                     delta_mu=p["delta_mu"])
    path = p["lengths"]
    if not os.path.exists(path):
        raise ConfigError(f"lengths file not found: {path}", "lengths")
    header, rows = fileio.read_csv(path)
    if header != ["t_m", "l1", "l2"]:
        raise ConfigError(f"{path}: expected columns t_m,l1,l2, got {header}",
                          "lengths")
    reports = []
    table_rows = []
    for row in rows:
        t_m, l1, l2 = float(row[0]), float(row[1]), float(row[2])
        report = scaling.report_from_lengths(l1, l2, window, t_m, tol)
        reports.append(scaling.report_to_dict(report, t_m=t_m))
        table_rows.append(scaling.report_row(t_m, report))
    files = []
    csv_path = os.path.join(config.out_dir, "scaling_table.csv")
    fileio.write_csv(csv_path, scaling.REPORT_COLUMNS, table_rows)
    files.append(csv_path)
    out = {
        "operation": "scaling-report",
        "window": {"t_i": p["t_i"], "t_e1": p["t_e1"], "t_e2": p["t_e2"],
                   "t_lambda": p["t_lambda"]},
        "tolerances": {"delta_gamma": p["delta_gamma"], "delta_mu": p["delta_mu"]},
        "reports": reports,
    }
    files.append(fileio.write_json(os.path.join(config.out_dir,
                                                "scaling_report.json"), out))
    return files


# ----------------------------------------------------------- reproduce

FIG7A_MEMORY_TIMES = (1e-2, 1.0, 10.0, 100.0, 1000.0, math.inf)


def _sub_config(subcommand, out_dir, seed, workers, **params):
    config = parse_config(subcommand, overrides=params)
    config.out_dir = out_dir
    config.seed = seed
    config.workers = workers
    os.makedirs(out_dir, exist_ok=True)
    return config


def _tm_tag(t_m):
    return "inf" if math.isinf(t_m) else ("%g" % t_m)


def cmd_reproduce(config):
    p = config.params
    target = p["target"]
    full = p["full"]
    seed, workers, root = config.seed, config.workers, config.out_dir
    files = []

    if target == "fig1":
        n = p["n_particles"] or 100
        sim = _sub_config("simulate-two-state", os.path.join(root, "sim"),
                          seed, workers, preset="fig1-two-state", n_particles=n)
        files += cmd_simulate_two_state(sim)
        sv = _sub_config("stats", os.path.join(root, "survival_ccw"), seed, workers,
                         input=sim.out_dir, op="survival", source="durations_ccw.csv")
        files += cmd_stats(sv)
        fit = _sub_config("stats", os.path.join(root, "fit"), seed, workers,
                          input=sv.out_dir, op="fit-loglog", source="survival.csv",
                          window=(30.0, 1e3))
        files += cmd_stats(fit)
        return files

    if target == "fig6":
        n = p["n_particles"] or 100
        sim = _sub_config("simulate-one-state", os.path.join(root, "sim"),
                          seed, workers, preset="fig6-one-state", n_particles=n)
        files += cmd_simulate_one_state(sim)
        sv = _sub_config("stats", os.path.join(root, "survival"), seed, workers,
                         input=sim.out_dir, op="survival")
        files += cmd_stats(sv)
        fit1 = _sub_config("stats", os.path.join(root, "fit_loglog"), seed, workers,
                           input=sv.out_dir, op="fit-loglog", source="survival.csv",
                           window=(1e2, 1e4))
        files += cmd_stats(fit1)
        fit2 = _sub_config("stats", os.path.join(root, "fit_semilog"), seed, workers,
                           input=sv.out_dir, op="fit-semilog", source="survival.csv",
                           window=(1e4, 1e5))
        files += cmd_stats(fit2)
        return files

    if target == "fig7a":
        n = p["n_particles"] or (1000 if full else 200)
        horizon = 1e6 if full else 1e5
        msd_dirs = {}
        for t_m in FIG7A_MEMORY_TIMES:
            tag = _tm_tag(t_m)
            sim = _sub_config("simulate-ibm", os.path.join(root, f"sim_Tm_{tag}"),
                              seed, workers, t_m=t_m, sigma=SQRT2, v0=0.02,
                              dtau=1.0, horizon=horizon, n_particles=n,
                              per_decade=16)
            files += cmd_simulate_ibm(sim)
            st = _sub_config("stats", os.path.join(root, f"msd_Tm_{tag}"),
                             seed, workers, input=sim.out_dir, op="msd")
            files += cmd_stats(st)
            msd_dirs[tag] = st.out_dir
        # slope guides: ballistic fit on the memoryless run, diffusive fit on
        # the short-memory run; figures draw these, they never re-fit
        guide_b = _sub_config("stats", os.path.join(root, "fit_ballistic"),
                              seed, workers, input=msd_dirs["inf"],
                              op="fit-loglog", source="msd.csv",
                              window=(10.0, 1e3))
        files += cmd_stats(guide_b)
        guide_d = _sub_config("stats", os.path.join(root, "fit_diffusive"),
                              seed, workers, input=msd_dirs["1"],
                              op="fit-loglog", source="msd.csv",
                              window=(1e3, horizon))
        files += cmd_stats(guide_d)
        return files

    if target == "fig9":
        sweep = _sub_config("oracle-sweep", os.path.join(root, "oracle"),
                            seed, workers, profile_times=(1.0, 2.0, 3.0, 4.0),
                            profile_points=1600)
        files += cmd_oracle_sweep(sweep)
        return files

    # table1 / table2
    rows = (scaling.CROSSOVER_SHORT_ROWS if target == "table1"
            else scaling.CROSSOVER_LONG_ROWS)
    window = (scaling.CROSSOVER_SHORT_WINDOW if target == "table1"
              else scaling.CROSSOVER_LONG_WINDOW)
    lengths_path = os.path.join(root, "lengths.csv")
    if full:
        n = p["n_particles"] or 200
        length_rows = []
        for row in rows:
            t_m = row["t_m"]
            tag = _tm_tag(t_m)
            sim = _sub_config("simulate-ibm", os.path.join(root, f"sim_Tm_{tag}"),
                              seed, workers, t_m=t_m, sigma=SQRT2, v0=0.02,
                              dtau=1.0, horizon=window.t_e2, n_particles=n,
                              observation_times=(window.t_i, window.t_e1,
                                                 window.t_e2))
            files += cmd_simulate_ibm(sim)
            rec = _load_ensemble(sim.out_dir)
            l1 = scaling.characteristic_length(rec, window.t_i, window.t_e1)
            l2 = scaling.characteristic_length(rec, window.t_i, window.t_e2)
            length_rows.append((t_m, l1, l2))
        fileio.write_csv(lengths_path, ("t_m", "l1", "l2"), length_rows)
    else:
        fileio.write_csv(lengths_path, ("t_m", "l1", "l2"),
                         [(row["t_m"], row["l1"], row["l2"]) for row in rows])
    files.append(lengths_path)
    rep = _sub_config("scaling-report", os.path.join(root, "report"),
                      seed, workers, lengths=lengths_path, t_i=window.t_i,
                      t_e1=window.t_e1, t_e2=window.t_e2,
                      t_lambda=window.t_lambda)
    files += cmd_scaling_report(rep)
    return files


HANDLERS = {
    "simulate-two-state": cmd_simulate_two_state,
    "simulate-one-state": cmd_simulate_one_state,
    "simulate-ibm": cmd_simulate_ibm,
    "stats": cmd_stats,
    "oracle-sweep": cmd_oracle_sweep,
    "scaling-report": cmd_scaling_report,
    "reproduce": cmd_reproduce,
}


def dispatch(config):
    """Run one subcommand and write the run manifest. Returns exit code 0."""
    os.makedirs(config.out_dir, exist_ok=True)
    emitted = HANDLERS[config.subcommand](config)
    config_path = os.path.join(config.out_dir, "config.ini")
    emit_config(config, config_path)
    emitted.append(config_path)
    fileio.write_run_manifest(config.out_dir, config.subcommand,
                              _config_dict(config), emitted)
    return EXIT_OK


# ---------------------------------------------------------------- main


def build_parser():
    parser = argparse.ArgumentParser(
        prog="runtumble",
        description="Simulation and verification toolkit for internal-state-"
                    "driven run-and-tumble motion.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, help=f"{name} subcommand")
        sp.add_argument("--config", default=None, help="INI config file")
        sp.add_argument("--preset", default=None,
                        help=f"named preset ({', '.join(sorted(PRESETS))})")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--seed", default=None, type=int, help="master seed")
        sp.add_argument("--workers", default=None, type=int, help="worker threads")
        for key, f in schema.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, metavar=f.ftype.upper(),
                            help=f.help)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {}
    for key in ("preset", "out", "seed", "workers"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    schema = SCHEMAS[args.subcommand]
    for key in schema:
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    try:
        config = parse_config(args.subcommand, config_path=args.config,
                              overrides=overrides)
        return dispatch(config)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "key": exc.key,
                          "message": exc.message}), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(json.dumps({"error": "numerical-guard", "message": str(exc)}),
              file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
