"""File formats: data/truth/particles/schedule/trace CSVs, summary JSON, TOML config.

Column layouts are documented in docs/csv_schema.md.  Floats are serialised
with 17 significant digits so written runs replay exactly.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

__all__ = [
    "write_data_csv", "read_data_csv", "write_particles_csv",
    "read_particles_csv", "write_schedule_csv", "write_trace_csv",
    "write_summary_json", "write_metadata_json", "load_config", "ConfigError",
]

FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def write_data_csv(path, times_per_comp, values_per_comp, components):
    """Long-format observations: one row per (time, component, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "component", "value"])
        for comp, times, values in zip(components, times_per_comp, values_per_comp):
            for t, v in zip(times, values):
                w.writerow([_fmt(t), comp + 1, _fmt(v)])


def read_data_csv(path):
    """Returns {zero-based component: (times, values)} sorted by time."""
    per_comp: dict[int, list] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"time", "component", "value"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise ConfigError(f"{path}: expected columns time, component, value")
        for row in reader:
            comp = int(row["component"]) - 1
            per_comp.setdefault(comp, []).append(
                (float(row["time"]), float(row["value"])))
    out = {}
    for comp, rows in per_comp.items():
        rows.sort()
        arr = np.asarray(rows, dtype=float)
        out[comp] = (arr[:, 0], arr[:, 1])
    return out


def particle_columns(model, n_basis):
    cols = ["weight", *model.param_names]
    if model.has_delay:
        cols.append("tau")
    cols += [f"sigma2_{k + 1}" for k in range(len(model.observed))]
    cols.append("lambda")
    for i, L in enumerate(n_basis):
        cols += [f"c_{i + 1}_{l + 1}" for l in range(L)]
    return cols


def write_particles_csv(path, states, weights, model):
    n_basis = [s.size for s in states[0].c]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(particle_columns(model, n_basis))
        for state, weight in zip(states, weights):
            row = [weight, *state.theta]
            if model.has_delay:
                row.append(state.tau)
            row += list(state.sigma2)
            row.append(state.lam)
            for ci in state.c:
                row += list(ci)
            w.writerow(_fmt(x) for x in row)


def read_particles_csv(path, model):
    """Rebuild (states, weights) from a particles file written by this package."""
    from .posterior import ParticleState

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [np.array([float(x) for x in row]) for row in reader]
    if not rows:
        raise ConfigError(f"{path}: no particles")
    idx = {name: j for j, name in enumerate(header)}
    n_basis = []
    for i in range(model.n_components):
        L = sum(1 for name in header if name.startswith(f"c_{i + 1}_"))
        n_basis.append(L)
    states = []
    weights = []
    for row in rows:
        theta = np.array([row[idx[name]] for name in model.param_names])
        tau = row[idx["tau"]] if model.has_delay else 0.0
        sigma2 = np.array([row[idx[f"sigma2_{k + 1}"]]
                           for k in range(len(model.observed))])
        lam = row[idx["lambda"]]
        c = []
        for i, L in enumerate(n_basis):
            c.append(np.array([row[idx[f"c_{i + 1}_{l + 1}"]] for l in range(L)]))
        states.append(ParticleState(theta, float(tau), c, sigma2, float(lam)))
        weights.append(row[idx["weight"]])
    return states, np.asarray(weights)


def write_schedule_csv(path, schedule):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "alpha", "rcess", "ress", "resampled",
                    "accept_theta", "accept_tau", "accept_c"])
        for r in range(len(schedule)):
            acc = schedule.accept[r]
            w.writerow([
                r + 1,
                _fmt(schedule.alphas[r]),
                _fmt(schedule.rcess[r]),
                _fmt(schedule.ress[r]),
                int(schedule.resampled[r]),
                _fmt(acc.get("theta", float("nan"))),
                _fmt(acc.get("tau", float("nan"))),
                _fmt(acc.get("c", float("nan"))),
            ])


def write_trace_csv(path, trace):
    keys = list(trace)
    n = len(trace[keys[0]])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for j in range(n):
            w.writerow(
                [int(trace[k][j]) if k == "iteration" else _fmt(trace[k][j])
                 for k in keys])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_summary_json(path, report):
    with open(path, "w") as fh:
        json.dump(_jsonable(report.to_dict()), fh, indent=2)


def write_metadata_json(path, diagnostics):
    with open(path, "w") as fh:
        json.dump(_jsonable(diagnostics), fh, indent=2)


def load_config(path):
    """Parse a TOML run-configuration file; missing sections default to {}."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            cfg = _toml.load(fh)
    except _toml.TOMLDecodeError as err:
        raise ConfigError(f"malformed config {path}: {err}") from err
    for section in ("model", "data", "priors", "spline", "smc", "kernel"):
        cfg.setdefault(section, {})
    return cfg
