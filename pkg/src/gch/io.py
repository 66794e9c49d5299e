"""CSV and JSON serialization of snapshots, energy logs and reports."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .eta import EtaState
from .lagrangian import EPS_BREAK, EulerianField, LagrangianState
from .semilinear import EnergyReport

FIELD_COLUMNS = ["label", "x", "u", "ux_or_nan", "energy_density"]
ENERGY_COLUMNS = ["T", "E", "E_bound", "dE_dT_analytic", "sup_u"]


def _fmt(v: float) -> str:
    return repr(float(v))


def _nan_to_none(a) -> list:
    return [None if not math.isfinite(v) else float(v) for v in np.asarray(a, dtype=float)]


def _none_to_nan(a) -> np.ndarray:
    return np.array([math.nan if v is None else v for v in a], dtype=float)


def field_to_dict(field: EulerianField) -> dict:
    return {"t": float(field.t), "label": _nan_to_none(field.label), "x": _nan_to_none(field.x),
            "u": _nan_to_none(field.u), "ux": _nan_to_none(field.ux),
            "energy_density": _nan_to_none(field.energy_density)}


def field_from_dict(d: dict) -> EulerianField:
    return EulerianField(float(d["t"]), _none_to_nan(d["x"]), _none_to_nan(d["u"]),
                         _none_to_nan(d["ux"]), _none_to_nan(d["energy_density"]),
                         _none_to_nan(d["label"]))


def field_to_json(field: EulerianField, path) -> None:
    # json writes floats with repr, which round-trips doubles exactly
    Path(path).write_text(json.dumps(field_to_dict(field)))


def field_from_json(path) -> EulerianField:
    return field_from_dict(json.loads(Path(path).read_text()))


def node_table(state, lam: float = 0.0, eps_break: float = EPS_BREAK) -> tuple[list[str], list[np.ndarray]]:
    """Per-node snapshot columns: the field schema followed by the solver's own variables."""
    if isinstance(state, EtaState):
        t, label, extra = state.t, state.eta, [("v", state.v)]
    elif isinstance(state, LagrangianState):
        t, label, extra = state.T, state.Y, [("v", state.v), ("xi", state.xi)]
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    defined = np.cos(0.5 * state.v) ** 2 > eps_break
    ux = np.full(state.x.shape, math.nan)
    ux[defined] = np.tan(0.5 * state.v[defined])
    dens = math.exp(2.0 * lam * t) * ux**2
    cols = FIELD_COLUMNS + [name for name, _ in extra]
    return cols, [label, state.x, state.u, ux, dens] + [a for _, a in extra]


def write_table(path, columns: list[str], arrays: list[np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in zip(*arrays):
            w.writerow([_fmt(v) for v in row])


def read_table(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(len(body), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


def field_to_csv(field: EulerianField, path) -> None:
    write_table(path, FIELD_COLUMNS, [field.label, field.x, field.u, field.ux, field.energy_density])


def field_from_csv(path, t: float = 0.0) -> EulerianField:
    d = read_table(path)
    return EulerianField(t, d["x"], d["u"], d["ux_or_nan"], d["energy_density"], d["label"])


def state_to_csv(state, path, lam: float = 0.0) -> None:
    cols, arrays = node_table(state, lam)
    write_table(path, cols, arrays)


def lagrangian_state_from_csv(path, T: float) -> LagrangianState:
    d = read_table(path)
    return LagrangianState(T, d["label"], d["u"], d["v"], d["xi"], d["x"])


def state_to_json(state, path, lam: float = 0.0) -> None:
    cols, arrays = node_table(state, lam)
    t = state.t if isinstance(state, EtaState) else state.T
    payload = {"t": float(t)}
    payload.update({c: _nan_to_none(a) for c, a in zip(cols, arrays)})
    Path(path).write_text(json.dumps(payload))


def write_energy_csv(path, reports: list[EnergyReport]) -> None:
    write_table(path, ENERGY_COLUMNS, [np.array([getattr(r, c) for r in reports]) for c in ENERGY_COLUMNS])


def read_energy_csv(path) -> list[EnergyReport]:
    d = read_table(path)
    return [EnergyReport(*(float(d[c][i]) for c in ENERGY_COLUMNS)) for i in range(d["T"].size)]


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return _nan_to_none(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
