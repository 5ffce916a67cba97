"""Run configuration: an INI file with one section per configured type.

Example::

    [MaterialParams]
    mu = 1.0
    lambda = 2.0
    gamma = 1.4

    [LagrangianGrid]
    y_min = -16
    y_max = 16
    n_cells = 1024

    [InitialData]
    preset = smooth-large-data
    u_amp = 1.0

    [StepConfig]
    cfl = 0.4
    dt_max = 0.0025
    j_update_mode = ode

    [Run]
    t_end = 1.0
    sample_interval = 0.1
    output_dir = out/smooth

Every section and key is optional except ``InitialData.preset``; missing
values come from the preset's defaults.  Keys in ``[InitialData]`` other
than ``preset`` are passed to the preset as parameters.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

from .errors import ConfigError, ValidationError
from .presets import get_preset
from .state import InitialData, LagrangianGrid, MaterialParams
from .stepper import StepConfig


@dataclass(frozen=True)
class RunConfig:
    params: MaterialParams
    grid: LagrangianGrid
    preset: str
    step: StepConfig
    preset_params: dict = field(default_factory=dict)
    t_end: float = 1.0
    sample_interval: float = 0.1
    output_dir: str = "lagmhd-out"
    seed: int = 0
    energy_tol: float = 1e-3
    bound_tol: float = 1e-2
    rho_min_for_G: Optional[float] = None
    boundary_tol: float = 1e-4
    write_snapshots: bool = True
    eulerian_points: int = 0

    def __post_init__(self):
        get_preset(self.preset)
        if not self.t_end > 0:
            raise ConfigError("t_end must be > 0")
        if not self.sample_interval > 0:
            raise ConfigError("sample_interval must be > 0")
        if self.energy_tol <= 0 or self.bound_tol < 0 or self.boundary_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.eulerian_points < 0:
            raise ConfigError("eulerian_points must be >= 0")

    # -- derived -----------------------------------------------------------

    def initial_data(self) -> InitialData:
        return get_preset(self.preset).initial_data(**self.preset_params)

    @property
    def rho_bar(self) -> float:
        return float(self.initial_data().rho_bar)

    @property
    def g_rho_min(self) -> float:
        if self.rho_min_for_G is not None:
            return float(self.rho_min_for_G)
        return 1e-3 * self.rho_bar

    def resolved_step(self) -> StepConfig:
        return self.step.resolved(self.rho_bar)

    def refined(self, level: int) -> "RunConfig":
        """Refinement level ``level``: dy, dt_max and cfl all divided by ``2**level``."""
        f = 2**level
        step = self.resolved_step()
        return replace(
            self,
            grid=replace(self.grid, n_cells=self.grid.n_cells * f),
            step=replace(step, dt_max=step.dt_max / f, cfl=step.cfl / f),
        )

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "RunConfig":
        p = get_preset(name)
        base = cls(
            params=MaterialParams(mu=p.mu, lam=p.lam, gamma=p.gamma),
            grid=LagrangianGrid(p.y_min, p.y_max, p.n_cells),
            preset=name,
            step=StepConfig(dt_max=p.dt_max),
            boundary_tol=p.boundary_tol,
        )
        return replace(base, **overrides) if overrides else base

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"].pop("four_pi", None)
        return d

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["MaterialParams"] = {"mu": repr(self.params.mu), "lambda": repr(self.params.lam),
                                "gamma": repr(self.params.gamma)}
        cp["LagrangianGrid"] = {"y_min": repr(self.grid.y_min), "y_max": repr(self.grid.y_max),
                                "n_cells": str(self.grid.n_cells)}
        cp["InitialData"] = {"preset": self.preset,
                             **{k: repr(v) for k, v in sorted(self.preset_params.items())}}
        st = {"cfl": repr(self.step.cfl), "dt_max": repr(self.step.dt_max),
              "j_update_mode": self.step.j_update_mode,
              "implicit_tol": repr(self.step.implicit_tol)}
        if self.step.mass_floor is not None:
            st["mass_floor"] = repr(self.step.mass_floor)
        cp["StepConfig"] = st
        run = {"t_end": repr(self.t_end), "sample_interval": repr(self.sample_interval),
               "output_dir": self.output_dir, "seed": str(self.seed),
               "energy_tol": repr(self.energy_tol), "bound_tol": repr(self.bound_tol),
               "boundary_tol": repr(self.boundary_tol),
               "write_snapshots": str(self.write_snapshots).lower(),
               "eulerian_points": str(self.eulerian_points)}
        if self.rho_min_for_G is not None:
            run["rho_min_for_G"] = repr(self.rho_min_for_G)
        cp["Run"] = run
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


_RUN_FLOATS = ("t_end", "sample_interval", "energy_tol", "bound_tol", "rho_min_for_G",
               "boundary_tol")
_KNOWN = {
    "MaterialParams": {"mu", "lambda", "gamma"},
    "LagrangianGrid": {"y_min", "y_max", "n_cells"},
    "StepConfig": {"cfl", "dt_max", "mass_floor", "j_update_mode", "implicit_tol"},
    "Run": set(_RUN_FLOATS) | {"output_dir", "seed", "write_snapshots", "eulerian_points"},
}


def _float(section, key):
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be a number, got {section[key]!r}") from None


def _int(section, key):
    try:
        return int(section[key])
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be an integer, got {section[key]!r}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None

    unknown_sections = set(cp.sections()) - set(_KNOWN) - {"InitialData"}
    if unknown_sections:
        raise ConfigError(f"unknown sections: {sorted(unknown_sections)}")
    for name, keys in _KNOWN.items():
        if name in cp:
            extra = set(cp[name]) - keys
            if extra:
                raise ConfigError(f"[{name}] unknown keys: {sorted(extra)}")

    if "InitialData" not in cp or "preset" not in cp["InitialData"]:
        raise ConfigError("[InitialData] preset is required")
    idata = cp["InitialData"]
    preset = idata["preset"].strip()
    preset_params = {k: _float(idata, k) for k in idata if k != "preset"}

    try:
        cfg = RunConfig.from_preset(preset)
        mp, gr, st = cfg.params, cfg.grid, cfg.step
        if "MaterialParams" in cp:
            s = cp["MaterialParams"]
            mp = MaterialParams(
                mu=_float(s, "mu") if "mu" in s else mp.mu,
                lam=_float(s, "lambda") if "lambda" in s else mp.lam,
                gamma=_float(s, "gamma") if "gamma" in s else mp.gamma,
            )
        if "LagrangianGrid" in cp:
            s = cp["LagrangianGrid"]
            gr = LagrangianGrid(
                y_min=_float(s, "y_min") if "y_min" in s else gr.y_min,
                y_max=_float(s, "y_max") if "y_max" in s else gr.y_max,
                n_cells=_int(s, "n_cells") if "n_cells" in s else gr.n_cells,
            )
        if "StepConfig" in cp:
            s = cp["StepConfig"]
            st = StepConfig(
                cfl=_float(s, "cfl") if "cfl" in s else st.cfl,
                dt_max=_float(s, "dt_max") if "dt_max" in s else st.dt_max,
                mass_floor=_float(s, "mass_floor") if "mass_floor" in s else st.mass_floor,
                j_update_mode=s.get("j_update_mode", st.j_update_mode).strip(),
                implicit_tol=_float(s, "implicit_tol") if "implicit_tol" in s else st.implicit_tol,
            )
        run = {}
        if "Run" in cp:
            s = cp["Run"]
            for k in _RUN_FLOATS:
                if k in s:
                    run[k] = _float(s, k)
            if "output_dir" in s:
                run["output_dir"] = s["output_dir"].strip()
            if "seed" in s:
                run["seed"] = _int(s, "seed")
            if "eulerian_points" in s:
                run["eulerian_points"] = _int(s, "eulerian_points")
            if "write_snapshots" in s:
                run["write_snapshots"] = s.getboolean("write_snapshots")
        cfg = replace(cfg, params=mp, grid=gr, step=st, preset_params=preset_params, **run)
        cfg.initial_data()
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
