"""Command line front end: ``gch simulate|verify|compare -c run.cfg``.

Configuration is INI-style::

    [model]    preset = ch | ch-dissipative | ch-forced | rch | custom
               lam, k, alpha, beta, h (comma-separated coefficients of u, u^2, ...)
               rch_c, rch_beta0, rch_beta, rch_omega1, rch_omega2, rch_alpha
    [data]     kind = gaussian | peakon | steep | zero | file
               amp, width, center, c, path, half_width, spacing
    [grid]     n, half_width (label span, or auto), eulerian_dx, eulerian_half_width
    [time]     t_end, dt (number or auto), snapshot_times, snapshot_every
    [solver]   solver = lagrangian | eta | eulerian | all (or a comma list)
    [output]   directory
    [verify]   x_center, width, weak_form_tol, balance_tol, energy_tol, regularity_tol
    [compare]  window_lo, window_hi, n_common
"""
from __future__ import annotations

import argparse
import configparser
import math
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, GchError, MissingArtifacts, WindowMismatch, WindowTooSmall
from .eta import eta_from_initial, integrate_eta
from .eulerian import EulerianGrid, centered_diff, integrate_eulerian, uniform_grid
from .io import (lagrangian_state_from_csv, read_energy_csv, read_table, state_to_csv,
                 state_to_json, field_to_csv, field_to_json, write_energy_csv, write_json)
from .lagrangian import EulerianField, GridSpec, auto_half_width, forward_transform, reconstruct
from .model import (GchParams, InitialData, NonlinearitySpec, from_samples, gaussian, make_preset,
                    peakon, sample_grid, steep, zero_data)
from .semilinear import Trajectory, auto_dt, integrate
from .verify import (CheckResult, balance_law_value, breaking_diagnostics, default_battery,
                     regularity_check, trajectory_fields, weak_form_value)

SOLVERS = ("lagrangian", "eta", "eulerian")


@dataclass
class RunConfig:
    preset: str = "ch"
    model: dict = field(default_factory=dict)
    data_kind: str = "gaussian"
    data: dict = field(default_factory=dict)
    n: int = 2048
    half_width: float | None = None
    eulerian_dx: float = 5e-3
    eulerian_half_width: float = 20.0
    t_end: float = 1.0
    dt: float | None = None
    snapshot_times: list = field(default_factory=list)
    snapshot_every: int | None = None
    solvers: list = field(default_factory=lambda: ["lagrangian"])
    output: str = "gch_out"
    verify: dict = field(default_factory=dict)
    compare: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
        elif current == section and "=" in line:
            if line.split("=", 1)[0].strip().lower() == key:
                return i
    return None


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, text: str, source: str):
        self.cp, self.text, self.source = cp, text, source

    def _error(self, section, key, msg):
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: [{section}] {key}: {msg}")

    def get(self, section, key, default=None):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return default

    def number(self, section, key, default=None, positive=False, integer=False):
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            value = int(raw) if integer else float(raw)
        except ValueError:
            raise self._error(section, key, f"expected {'an integer' if integer else 'a number'}, got {raw!r}") from None
        if not math.isfinite(value):
            raise self._error(section, key, "must be finite")
        if positive and not value > 0:
            raise self._error(section, key, "must be positive")
        return value

    def numbers(self, section, key):
        raw = self.get(section, key)
        if raw is None or raw == "":
            return []
        try:
            return [float(s) for s in raw.split(",") if s.strip()]
        except ValueError:
            raise self._error(section, key, f"expected comma-separated numbers, got {raw!r}") from None


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    r = _Reader(cp, text, source)
    cfg = RunConfig()
    cfg.preset = r.get("model", "preset", "ch")
    model = {}
    for key in ("lam", "k", "alpha", "beta", "rch_c", "rch_beta0", "rch_beta", "rch_omega1",
                "rch_omega2", "rch_alpha"):
        v = r.number("model", key)
        if v is not None:
            model[key] = v
    if r.get("model", "h") is not None:
        model["h"] = r.numbers("model", "h")
    cfg.model = model
    cfg.data_kind = r.get("data", "kind", "gaussian")
    if cfg.data_kind not in ("gaussian", "peakon", "steep", "zero", "file"):
        raise r._error("data", "kind", f"unknown data kind {cfg.data_kind!r}")
    data = {}
    for key in ("amp", "width", "center", "c"):
        v = r.number("data", key)
        if v is not None:
            data[key] = v
    for key in ("half_width", "spacing"):
        v = r.number("data", key, positive=True)
        if v is not None:
            data[key] = v
    if cfg.data_kind == "file":
        path = r.get("data", "path")
        if not path:
            raise r._error("data", "path", "required when kind = file")
        data["path"] = path
    cfg.data = data
    cfg.n = r.number("grid", "n", 2048, integer=True)
    if cfg.n < 3:
        raise r._error("grid", "n", "must be at least 3")
    hw = r.get("grid", "half_width", "auto")
    cfg.half_width = None if hw == "auto" else r.number("grid", "half_width", positive=True)
    cfg.eulerian_dx = r.number("grid", "eulerian_dx", 5e-3, positive=True)
    cfg.eulerian_half_width = r.number("grid", "eulerian_half_width", 20.0, positive=True)
    cfg.t_end = r.number("time", "t_end", 1.0, positive=True)
    dt = r.get("time", "dt", "auto")
    cfg.dt = None if dt == "auto" else r.number("time", "dt", positive=True)
    cfg.snapshot_times = r.numbers("time", "snapshot_times")
    for t in cfg.snapshot_times:
        if not 0.0 <= t <= cfg.t_end:
            raise r._error("time", "snapshot_times", f"{t} outside [0, t_end]")
    cfg.snapshot_every = r.number("time", "snapshot_every", None, positive=True, integer=True)
    solver = r.get("solver", "solver", "lagrangian")
    names = list(SOLVERS) if solver == "all" else [s.strip() for s in solver.split(",") if s.strip()]
    for s in names:
        if s not in SOLVERS:
            raise r._error("solver", "solver", f"unknown solver {s!r}")
    cfg.solvers = names
    cfg.output = r.get("output", "directory", "gch_out")
    cfg.verify = {k: r.number("verify", k) for k in ("x_center", "width", "weak_form_tol", "balance_tol",
                                                      "energy_tol", "regularity_tol")
                  if r.get("verify", k) is not None}
    cfg.compare = {k: r.number("compare", k) for k in ("window_lo", "window_hi", "n_common")
                   if r.get("compare", k) is not None}
    # fail early on inconsistent model settings
    try:
        build_params(cfg)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{source}: [model] {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(p.read_text(), str(p))


def build_params(cfg: RunConfig) -> GchParams:
    m = cfg.model
    if cfg.preset == "custom":
        h = NonlinearitySpec(tuple(m.get("h", (0.0, 1.0))), "custom")
        return GchParams(m.get("alpha", 1.0), m.get("beta", 0.0), m.get("k", 0.0), m.get("lam", 0.0), h)
    if cfg.preset == "rch":
        return make_preset("rch", c=m.get("rch_c", 1.0), beta0=m.get("rch_beta0", 0.0),
                           beta=m.get("rch_beta", 1.0), omega1=m.get("rch_omega1", 0.0),
                           omega2=m.get("rch_omega2", 0.0), alpha=m.get("rch_alpha", 1.0))
    return make_preset(cfg.preset, lam=m.get("lam", 0.0), k=m.get("k", 0.0))


def build_data(cfg: RunConfig) -> InitialData:
    d = cfg.data
    if cfg.data_kind == "file":
        path = Path(d["path"])
        if not path.is_file():
            raise MissingArtifacts(f"initial data file {path} not found")
        table = read_table(path)
        if "x" not in table or "u" not in table:
            raise ConfigError(f"{path}: needs columns x and u (optional ux)")
        data = from_samples(table["x"], table["u"], table.get("ux"))
        data.validate()
        return data
    x = sample_grid(d.get("half_width", 30.0), d.get("spacing", 1e-3))
    if cfg.data_kind == "gaussian":
        return gaussian(x, d.get("amp", 0.25), d.get("width", 1.0), d.get("center", 0.0))
    if cfg.data_kind == "peakon":
        return peakon(x, d.get("c", 1.0), d.get("center", 0.0))
    if cfg.data_kind == "steep":
        return steep(x, d.get("amp", 2.0))
    return zero_data(x)


@dataclass
class RunResult:
    trajectories: dict
    eulerian: list | None
    params: GchParams
    data: InitialData
    dt: float


def _grid(cfg: RunConfig, data: InitialData, params: GchParams) -> GridSpec:
    hw = cfg.half_width if cfg.half_width is not None else auto_half_width(data, params, cfg.t_end)
    return GridSpec(cfg.n, hw)


def run_solvers(cfg: RunConfig, solvers=None, snapshot_every: int | None = None) -> RunResult:
    params = build_params(cfg)
    data = build_data(cfg)
    grid = _grid(cfg, data, params)
    E0 = data.h1_norm() ** 2
    dt = cfg.dt if cfg.dt is not None else auto_dt(params, E0, cfg.t_end)
    every = snapshot_every if snapshot_every is not None else cfg.snapshot_every
    times = cfg.snapshot_times or None
    trajs = {}
    eul = None
    for name in solvers or cfg.solvers:
        if name == "lagrangian":
            trajs[name] = integrate(forward_transform(data, grid), params, cfg.t_end, dt, times, every)
        elif name == "eta":
            trajs[name] = integrate_eta(eta_from_initial(data, grid), params, cfg.t_end, dt, times, every)
        elif name == "eulerian":
            x = uniform_grid(cfg.eulerian_half_width, cfg.eulerian_dx)
            snaps = sorted(set(times or []) | {0.0, cfg.t_end})
            eul = integrate_eulerian(EulerianGrid(0.0, x, data.value_at(x)), params, cfg.t_end,
                                     snapshot_times=snaps)
    return RunResult(trajs, eul, params, data, dt)


def eulerian_to_field(g: EulerianGrid, lam: float) -> EulerianField:
    ux = centered_diff(g.u, g.dx)
    return EulerianField(g.t, g.x.copy(), g.u.copy(), ux, math.exp(2.0 * lam * g.t) * ux**2, g.x.copy())


def _versions() -> dict:
    import numba
    return {"gch": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "numba": numba.__version__}


def output_dir(cfg: RunConfig, override: str | None = None) -> Path:
    out = Path(override or os.environ.get("GCH_OUT") or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_run(result: RunResult, cfg: RunConfig, out: Path, wall: float) -> list[str]:
    files = []
    lam = result.params.lam
    for name, traj in result.trajectories.items():
        for i, state in enumerate(traj.states):
            stem = out / f"snapshot_{name}_{i:04d}"
            state_to_csv(state, f"{stem}.csv", lam)
            state_to_json(state, f"{stem}.json", lam)
            files += [f"{stem.name}.csv", f"{stem.name}.json"]
        write_energy_csv(out / f"energy_{name}.csv", traj.reports)
        files.append(f"energy_{name}.csv")
    if result.eulerian is not None:
        for i, g in enumerate(result.eulerian):
            f = eulerian_to_field(g, lam)
            stem = out / f"snapshot_eulerian_{i:04d}"
            field_to_csv(f, f"{stem}.csv")
            field_to_json(f, f"{stem}.json")
            files += [f"{stem.name}.csv", f"{stem.name}.json"]
    manifest = {
        "config": cfg.to_dict(),
        "params": result.params.to_dict(),
        "dt": result.dt,
        "snapshot_times": {name: traj.times.tolist() for name, traj in result.trajectories.items()},
        "versions": _versions(),
        "wall_time_s": wall,
        "files": files,
    }
    if result.eulerian is not None:
        manifest["snapshot_times"]["eulerian"] = [g.t for g in result.eulerian]
    write_json(out / "manifest.json", manifest)
    return files


def cmd_simulate(cfg: RunConfig, out: Path) -> int:
    start = time.perf_counter()
    result = run_solvers(cfg)
    write_run(result, cfg, out, time.perf_counter() - start)
    return 0


def load_run(run_dir) -> Trajectory:
    """Lagrangian trajectory stored by ``simulate`` in run_dir."""
    import json
    run_dir = Path(run_dir)
    man = run_dir / "manifest.json"
    if not man.is_file():
        raise MissingArtifacts(f"{man} not found")
    manifest = json.loads(man.read_text())
    times = manifest.get("snapshot_times", {}).get("lagrangian")
    if not times:
        raise MissingArtifacts(f"{run_dir} holds no lagrangian snapshots")
    params = GchParams.from_dict(manifest["params"])
    traj = Trajectory(params, manifest.get("dt", 0.0))
    for i, t in enumerate(times):
        path = run_dir / f"snapshot_lagrangian_{i:04d}.csv"
        if not path.is_file():
            raise MissingArtifacts(f"{path} not found")
        traj.states.append(lagrangian_state_from_csv(path, t))
    energy_path = run_dir / "energy_lagrangian.csv"
    if not energy_path.is_file():
        raise MissingArtifacts(f"{energy_path} not found")
    traj.reports = read_energy_csv(energy_path)
    return traj


def verify_trajectory(traj: Trajectory, cfg: RunConfig) -> list[CheckResult]:
    params = traj.params
    v = cfg.verify
    tol_w = v.get("weak_form_tol", 1e-2)
    tol_b = v.get("balance_tol", 1e-2)
    tol_e = v.get("energy_tol", 1e-4)
    tol_r = v.get("regularity_tol", 5e-2)
    checks = []
    reps = traj.reports
    worst = max((r.E - r.E_bound * (1 + tol_e) for r in reps), default=0.0)
    checks.append(CheckResult("energy_bound", worst, 0.0, worst <= 0.0))
    sup_gap = max((r.sup_u - math.sqrt(r.E) * (1 + tol_e) for r in reps), default=0.0)
    checks.append(CheckResult("sup_bound", sup_gap, 0.0, sup_gap <= 0.0))
    if params.k == 0.0 and params.lam == 0.0 and reps[0].E > 0:
        drift = max(abs(r.E - reps[0].E) for r in reps) / reps[0].E
        checks.append(CheckResult("energy_conservation", drift, tol_e, drift <= tol_e))
    T = float(traj.times[-1])
    battery = default_battery(T, v.get("x_center", 0.0), v.get("width", 2.0))
    try:
        fields = trajectory_fields(traj)
        for i, phi in enumerate(battery):
            norm = phi.c1_norm()
            w = abs(weak_form_value(traj, params, phi, fields))
            checks.append(CheckResult(f"weak_form_{i}", w, tol_w * norm, w <= tol_w * norm))
            b = abs(balance_law_value(traj, params, phi, fields))
            bu = abs(balance_law_value(traj, params, phi, fields, weighted=False))
            checks.append(CheckResult(f"balance_law_{i}", b, tol_b * norm, b <= tol_b * norm,
                                      {"unweighted": bu}))
    except WindowTooSmall as exc:
        checks.append(CheckResult("test_function_window", math.nan, None, False, {"error": str(exc)}))
    if len(traj) >= 3:
        reg = regularity_check(traj)
        ok = reg.l2_time_quotient <= reg.l2_time_bound * (1 + tol_r) + 1e-14
        checks.append(CheckResult("l2_time_lipschitz", reg.l2_time_quotient, reg.l2_time_bound, ok,
                                  reg.to_dict()))
    br = breaking_diagnostics(traj)
    checks.append(CheckResult("breaking_fraction", br.fraction_breaking, None, True,
                              {"min_xY": float(br.min_xY.min())}))
    return checks


def cmd_verify(cfg: RunConfig, out: Path, run_dir: str | None = None) -> int:
    if run_dir is not None:
        traj = load_run(run_dir)
    else:
        every = cfg.snapshot_every or 1
        traj = run_solvers(cfg, ["lagrangian"], snapshot_every=every).trajectories["lagrangian"]
    checks = verify_trajectory(traj, cfg)
    passed = all(c.passed for c in checks)
    write_json(out / "verify_report.json", {"passed": passed, "checks": [c.to_dict() for c in checks]})
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<22} value={c.value:.3e}"
             + (f"  tol={c.tolerance:.3e}" if c.tolerance is not None else "") for c in checks]
    lines.append(f"overall: {'PASS' if passed else 'FAIL'}")
    (out / "verify_report.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if passed else 1


def compare_fields(fields: dict, window: tuple[float, float], n_common: int = 4001) -> list[dict]:
    """Pairwise distances of u on a common grid over ``window``."""
    lo, hi = window
    for name, f in fields.items():
        if f.x[0] > lo or f.x[-1] < hi:
            raise WindowMismatch(f"{name} covers [{f.x[0]:.4g}, {f.x[-1]:.4g}], window is [{lo:.4g}, {hi:.4g}]")
    xc = np.linspace(lo, hi, n_common)
    dx = xc[1] - xc[0]
    us = {name: np.interp(xc, f.x, f.u) for name, f in fields.items()}
    names = list(fields)
    rows = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = us[names[i]], us[names[j]]
            l2 = math.sqrt(dx * float(np.sum((a - b) ** 2)))
            ref = math.sqrt(dx * float(np.sum(b**2)))
            rows.append({"a": names[i], "b": names[j], "linf": float(np.max(np.abs(a - b))),
                         "l2": l2, "l2_rel": l2 / ref if ref > 0 else 0.0})
    return rows


def cmd_compare(cfg: RunConfig, out: Path) -> int:
    if len(cfg.solvers) < 2:
        raise ConfigError("compare needs at least two solvers ([solver] solver = all or a list)")
    result = run_solvers(cfg)
    lam = result.params.lam
    requested = sorted(set(cfg.snapshot_times) | {0.0, cfg.t_end})
    window = (cfg.compare.get("window_lo", -10.0), cfg.compare.get("window_hi", 10.0))
    n_common = int(cfg.compare.get("n_common", 4001))
    table = []
    for t in requested:
        # every solver snapshots at its step nearest to t
        fields = {}
        for name, traj in result.trajectories.items():
            i = int(np.argmin(np.abs(traj.times - t)))
            fields[name] = reconstruct(traj.states[i], lam)
        if result.eulerian is not None:
            ts = np.array([g.t for g in result.eulerian])
            fields["eulerian"] = eulerian_to_field(result.eulerian[int(np.argmin(np.abs(ts - t)))], lam)
        for row in compare_fields(fields, window, n_common):
            table.append({"t": t, **row})
    cols = ["t", "a", "b", "linf", "l2", "l2_rel"]
    with open(out / "compare.csv", "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in table:
            fh.write(",".join(str(row[c]) if c in ("a", "b") else repr(float(row[c])) for c in cols) + "\n")
    for row in table:
        print(f"t={row['t']:.4g} {row['a']} vs {row['b']}: Linf={row['linf']:.3e} L2rel={row['l2_rel']:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gch", description="generalized Camassa-Holm solver and checks")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "verify", "compare"):
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", required=True, help="INI run configuration")
        p.add_argument("-o", "--out", help="output directory (overrides GCH_OUT and the config)")
        if name == "verify":
            p.add_argument("--run-dir", help="verify a completed simulate run instead of rerunning")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        out = output_dir(cfg, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out, args.run_dir)
        return cmd_compare(cfg, out)
    except GchError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
