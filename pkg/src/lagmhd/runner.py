"""Run orchestration: time loop, sampling, invariant checks and artifacts."""
from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .config import RunConfig
from .diagnostics import (
    MONITOR_NAMES,
    Accumulators,
    InvariantReport,
    report,
    step_residuals,
)
from .errors import ConfigError, InvariantViolation, SolverError, ValidationError
from .eulerian import build_flow_map, to_eulerian
from .io import (
    dumps,
    snapshot_path,
    write_eulerian_snapshot,
    write_ndjson,
    write_snapshot,
)
from .state import FluidState, boundary_decay_violations, discretize
from .stepper import advance, stable_dt

EXIT_PASS = 0
EXIT_INVARIANT = 1
EXIT_SOLVER = 2
EXIT_CONFIG = 3

OUTPUT_DIR_ENV = "LAGMHD_OUTPUT_DIR"
GROWTH_FACTOR = 10.0
_T_EPS = 1e-12


def sample_times(t_end: float, interval: float) -> np.ndarray:
    """Sample instants ``interval, 2*interval, ...`` up to and including ``t_end``."""
    k = int(math.floor(t_end / interval + 1e-9))
    ts = [interval * i for i in range(1, k + 1)]
    if not ts or t_end - ts[-1] > _T_EPS * max(1.0, t_end):
        ts.append(t_end)
    ts[-1] = t_end
    return np.asarray(ts)


def boundary_violations(state: FluidState, tol: float) -> list:
    """Fields whose outermost live sites exceed ``tol`` times their maximum.

    Velocities are weighted by ``sqrt(rho0)`` because they are unobservable
    (carry no energy) where the density vanishes.
    """
    w = np.sqrt(np.concatenate([[state.rho0[0]], 0.5 * (state.rho0[1:] + state.rho0[:-1]),
                                [state.rho0[-1]]]))
    return boundary_decay_violations(
        {"u": (w * state.u, 1), "omega": (w[:, None] * state.omega, 1),
         "h": (state.h, 0), "P": (state.P, 0)},
        tol,
    )


@dataclass
class Trajectory:
    """Result of :func:`simulate`."""

    config: RunConfig
    initial: FluidState
    final: FluidState
    reports: list
    states: list = field(default_factory=list)
    wall_time: float = 0.0
    error: Optional[Exception] = None
    dt_min: float = math.inf
    dt_max: float = 0.0

    @property
    def records(self) -> list:
        return [r.to_dict() for r in self.reports]


def _next_dt(state, params, step_cfg, target):
    remaining = target - state.t
    dt = stable_dt(state, params, step_cfg)
    # equal steps to the sample time so no sliver step is ever taken
    k = max(1, int(math.ceil(remaining / dt - 1e-9)))
    return remaining / k


def simulate(cfg: RunConfig, *, keep_states: bool = False,
             on_sample: Optional[Callable[[int, FluidState, InvariantReport], None]] = None,
             raise_errors: bool = True) -> Trajectory:
    """Integrate ``cfg`` to ``t_end`` and collect one report per sample time.

    The report at ``t = 0`` is included.  With ``raise_errors=False`` a solver
    or boundary failure ends the run early and is stored in ``error``.
    """
    started = time.perf_counter()
    try:
        init = discretize(cfg.initial_data(), cfg.grid)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    params = cfg.params
    step_cfg = cfg.resolved_step()
    acc = Accumulators.start(init, params)
    rep0 = report(init, params, acc, step_cfg.eps)
    traj = Trajectory(config=cfg, initial=init, final=init, reports=[rep0],
                      states=[init] if keep_states else [])
    if on_sample:
        on_sample(0, init, rep0)

    state = init
    rho_min = cfg.g_rho_min
    try:
        for k, target in enumerate(sample_times(cfg.t_end, cfg.sample_interval), 1):
            while target - state.t > _T_EPS * max(1.0, target):
                dt = _next_dt(state, params, step_cfg, target)
                new, dt = advance(state, params, step_cfg, dt)
                if target - new.t <= _T_EPS * max(1.0, target):
                    new = new.evolve(t=float(target))
                acc.record_step(state, new, step_residuals(state, new, params, rho_min))
                traj.dt_min = min(traj.dt_min, dt)
                traj.dt_max = max(traj.dt_max, dt)
                state = new
            rep = report(state, params, acc, step_cfg.eps)
            traj.reports.append(rep)
            traj.final = state
            if keep_states:
                traj.states.append(state)
            if on_sample:
                on_sample(k, state, rep)
            bad = boundary_violations(state, cfg.boundary_tol)
            if bad:
                raise InvariantViolation(
                    f"fields reach the box edges at t = {state.t:.6g}: {', '.join(bad)} "
                    f"(boundary_tol = {cfg.boundary_tol:g}); enlarge the domain")
    except (SolverError, InvariantViolation) as exc:
        traj.error = exc
        if raise_errors:
            raise
    finally:
        traj.wall_time = time.perf_counter() - started
    return traj


# ---------------------------------------------------------------------------
# invariant evaluation shared by ``run`` and ``check``


def evaluate_invariants(records: list, *, energy_tol: float = 1e-3, bound_tol: float = 1e-2,
                        growth_factor: float = GROWTH_FACTOR) -> dict:
    """Pass/fail per invariant from an NDJSON report series.

    Depends only on the records, so ``check`` reproduces ``run`` exactly.
    """
    if not records:
        raise ValidationError("empty report series")
    out = {}

    drift = max(r["energy_drift_rel"] for r in records)
    out["energy"] = {"pass": bool(drift <= energy_tol), "max_drift": drift,
                     "tolerance": energy_tol}

    bound = records[0]["j_lower_bound"]
    j_min = min(min(r["j_min"], r.get("j_min_run", r["j_min"])) for r in records)
    out["j_lower_bound"] = {"pass": bool(j_min >= bound * (1.0 - bound_tol)), "j_min": j_min,
                            "bound": bound, "tolerance": bound_tol}

    p_min = min(min(r["p_min"], r.get("p_min_run", r["p_min"])) for r in records)
    out["pressure_nonnegative"] = {"pass": bool(p_min >= 0.0), "p_min": p_min}

    numeric = [v for r in records for v in _numbers(r)]
    out["finite"] = {"pass": bool(all(math.isfinite(v) for v in numeric))}

    t_end = records[-1]["t"]
    first = [r for r in records if r["t"] <= 0.5 * t_end]
    second = [r for r in records if r["t"] > 0.5 * t_end]
    worst = {}
    ok = True
    for name in MONITOR_NAMES:
        cap = max(r["monitor_norms"][name] for r in first)
        late = max((r["monitor_norms"][name] for r in second), default=cap)
        worst[name] = {"first_half_max": cap, "second_half_max": late}
        if not (math.isfinite(late) and late <= growth_factor * cap):
            ok = False
    out["monitor_norms_bounded"] = {"pass": ok, "factor": growth_factor, "norms": worst}
    return out


def _numbers(obj):
    if isinstance(obj, bool):
        return
    if isinstance(obj, (int, float)):
        yield float(obj)
    elif isinstance(obj, dict):
        for v in obj.values():
            yield from _numbers(v)


def _max_of(records, key):
    return max(r[key] for r in records)


def summarize(cfg: RunConfig, traj: Trajectory) -> dict:
    records = traj.records
    inv = evaluate_invariants(records, energy_tol=cfg.energy_tol, bound_tol=cfg.bound_tol)
    if traj.error is not None:
        status = "abort" if isinstance(traj.error, SolverError) else "fail"
        code = EXIT_SOLVER if isinstance(traj.error, SolverError) else EXIT_INVARIANT
        inv["completed"] = {"pass": False, "error": str(traj.error)}
    else:
        inv["completed"] = {"pass": True}
        ok = all(v["pass"] for v in inv.values())
        status, code = ("pass", EXIT_PASS) if ok else ("fail", EXIT_INVARIANT)
    return {
        "status": status,
        "exit_code": code,
        "invariants": inv,
        "max_energy_drift": _max_of(records, "energy_drift_rel"),
        "max_lnj_residual": _max_of(records, "lnj_residual_Linf"),
        "max_h_ode_residual": _max_of(records, "h_ode_residual_Linf"),
        "max_p_ode_residual": _max_of(records, "p_ode_residual_Linf"),
        "max_g_eq_residual": _max_of(records, "g_eq_residual_L2"),
        "max_f_eq_residual": _max_of(records, "f_eq_residual_L2"),
        "j_min": inv["j_lower_bound"]["j_min"],
        "j_lower_bound": inv["j_lower_bound"]["bound"],
        "t_final": records[-1]["t"],
        "n_steps": records[-1]["n_steps"],
        "n_samples": len(records),
        "backend": _kernels.backend(),
        "wall_time_s": traj.wall_time,
        "config": cfg.to_dict(),
    }


def resolve_output_dir(cfg: RunConfig, override=None) -> Path:
    return Path(override or os.environ.get(OUTPUT_DIR_ENV) or cfg.output_dir)


def run(cfg: RunConfig, output_dir=None) -> tuple:
    """Run ``cfg`` and write its artifacts; returns ``(exit_code, summary)``.

    Artifacts in the output directory: ``config.ini``, ``reports.ndjson``,
    ``snapshot_NNNN.txt`` (plus ``_eulerian`` twins when requested) and
    ``summary.json``.  Everything except ``wall_time_s`` in the summary is
    a deterministic function of the config.
    """
    out = resolve_output_dir(cfg, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")

    def on_sample(k, state, rep):
        if not cfg.write_snapshots:
            return
        write_snapshot(snapshot_path(out, k), state, cfg.params, {"sample": k})
        if cfg.eulerian_points:
            fmap = build_flow_map(state)
            x = np.linspace(fmap.x_min, fmap.x_max, cfg.eulerian_points)
            write_eulerian_snapshot(snapshot_path(out, k, "eulerian"),
                                    to_eulerian(state, fmap, x), state.grid, cfg.params,
                                    {"sample": k})

    traj = simulate(cfg, on_sample=on_sample, raise_errors=False)
    write_ndjson(out / "reports.ndjson", traj.records)
    summary = summarize(cfg, traj)
    (out / "summary.json").write_text(dumps(summary) + "\n", encoding="utf-8")
    return summary["exit_code"], summary


# ---------------------------------------------------------------------------
# refinement studies

CONVERGENCE_QUANTITIES = {
    "energy_drift": ("energy_drift_rel", "max"),
    "lnj_residual": ("lnj_residual_Linf", "final"),
    "h_ode_residual": ("h_ode_residual_Linf", "final"),
    "p_ode_residual": ("p_ode_residual_Linf", "final"),
    "g_eq_residual": ("g_eq_residual_L2", "final"),
    "f_eq_residual": ("f_eq_residual_L2", "final"),
}


def observed_orders(values) -> list:
    """Successive ``log2`` ratios; ``None`` where a ratio is undefined or non-monotone."""
    orders = []
    for a, b in zip(values[:-1], values[1:]):
        if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b) and b < a:
            orders.append(math.log2(a / b))
        else:
            orders.append(None)
    return orders


def convergence_study(cfg: RunConfig, levels: int = 3, *, min_order: float = 1.0,
                      quantities=None) -> dict:
    """Refine ``dy``, ``dt_max`` and ``cfl`` together over ``levels`` levels.

    The reported order of each quantity is the last successive-ratio order;
    a quantity passes when that order is at least ``min_order``.  Quantities
    that are zero or non-monotone get order ``"n/a"`` and do not fail.
    """
    if levels < 3:
        raise ConfigError("convergence_study needs at least 3 levels")
    quantities = quantities or CONVERGENCE_QUANTITIES
    raw = {name: [] for name in quantities}
    runs = []
    for lev in range(levels):
        sub = cfg.refined(lev)
        traj = simulate(sub)
        recs = traj.records
        runs.append({"level": lev, "n_cells": sub.grid.n_cells, "dt_max": sub.step.dt_max,
                     "n_steps": recs[-1]["n_steps"], "wall_time_s": traj.wall_time})
        for name, (key, how) in quantities.items():
            vals = [r[key] for r in recs]
            raw[name].append(max(vals) if how == "max" else vals[-1])
    result = {}
    ok = True
    for name, vals in raw.items():
        orders = observed_orders(vals)
        last = orders[-1]
        passed = last is None or last >= min_order
        ok = ok and passed
        result[name] = {"values": vals, "orders": ["n/a" if o is None else o for o in orders],
                        "order": "n/a" if last is None else last, "pass": passed}
    return {"pass": ok, "min_order": min_order, "levels": runs, "quantities": result}


def j_path_difference(cfg: RunConfig) -> float:
    """``||J_ode - J_exp||_inf`` at ``t_end`` from twin runs of ``cfg``."""
    finals = []
    for mode in ("ode", "exponential"):
        sub = replace(cfg, step=replace(cfg.step, j_update_mode=mode))
        finals.append(simulate(sub).final.J)
    return float(np.max(np.abs(finals[0] - finals[1])))
