"""Named initial-data scenarios.

Each preset carries default material parameters, a default box and a time
step cap so that ``lagmhd run`` works with nothing but a preset name.
Presets accept keyword overrides for their amplitudes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .state import InitialData


def _gauss(y, width=1.0, center=0.0):
    return np.exp(-0.5 * ((y - center) / width) ** 2)


def _pair(a, b):
    return np.stack([a, b], axis=1)


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    build: Callable[..., InitialData]
    y_min: float
    y_max: float
    n_cells: int
    mu: float = 1.0
    lam: float = 2.0
    gamma: float = 1.4
    dt_max: float = 5e-3
    boundary_tol: float = 1e-4
    defaults: dict = field(default_factory=dict)

    def initial_data(self, **overrides) -> InitialData:
        unknown = set(overrides) - set(self.defaults)
        if unknown:
            raise ConfigError(f"preset {self.name!r} has no parameters {sorted(unknown)}")
        return self.build(**{**self.defaults, **overrides})


def _quiescent(rho=1.0, pressure=0.0, rho_bar=1.0, decay_tol=1e-8):
    return InitialData(
        rho0_fn=lambda y: np.full_like(y, rho),
        P0_fn=lambda y: np.full_like(y, pressure),
        rho_bar=rho_bar,
        decay_tol=decay_tol,
    )


def _smooth(u_amp=1.0, w_amp=0.5, h_amp=2.0, p_amp=1.0, rho_var=0.4, rho_bar=1.5,
            decay_tol=1e-8):
    return InitialData(
        rho0_fn=lambda y: 1.0 + rho_var * np.sin(0.5 * np.pi * y) * _gauss(y, 1.5),
        u0_fn=lambda y: u_amp * np.sin(0.5 * np.pi * y) * _gauss(y),
        omega0_fn=lambda y: _pair(w_amp * np.sin(np.pi * y) * _gauss(y),
                                  w_amp * _gauss(y, 0.8, 0.5)),
        h0_fn=lambda y: _pair(h_amp * _gauss(y, 0.7), 0.5 * h_amp * _gauss(y, 0.7, -0.5)),
        P0_fn=lambda y: p_amp * _gauss(y),
        rho_bar=rho_bar,
        decay_tol=decay_tol,
    )


def _vacuum_patch(u_amp=0.5, w_amp=0.5, h_amp=1.0, p_amp=1.0, rho_bar=1.0, decay_tol=1e-8):
    def rho0(y):
        return np.maximum(0.0, 1.0 - y * y)

    return InitialData(
        rho0_fn=rho0,
        u0_fn=lambda y: u_amp * np.sin(np.pi * y) * _gauss(y, 0.5),
        omega0_fn=lambda y: _pair(w_amp * _gauss(y, 0.5), 0.5 * w_amp * np.sin(np.pi * y)
                                  * _gauss(y, 0.5)),
        h0_fn=lambda y: _pair(h_amp * _gauss(y, 0.4), 0.5 * h_amp * _gauss(y, 0.4, 0.2)),
        P0_fn=lambda y: p_amp * rho0(y) ** 2,
        rho_bar=rho_bar,
        decay_tol=decay_tol,
    )


def _density_jump(rho_left=2.0, rho_right=1.0, u_amp=0.5, h_amp=1.0, p_amp=1.0, rho_bar=2.0,
                  decay_tol=1e-8):
    return InitialData(
        rho0_fn=lambda y: np.where(y < 0.0, rho_left, rho_right),
        u0_fn=lambda y: u_amp * np.sin(0.5 * np.pi * y) * _gauss(y),
        omega0_fn=lambda y: _pair(0.5 * u_amp * _gauss(y, 1.0, 0.5), np.zeros_like(y)),
        h0_fn=lambda y: _pair(h_amp * _gauss(y, 0.8), np.zeros_like(y)),
        P0_fn=lambda y: p_amp * _gauss(y, 1.2),
        rho_bar=rho_bar,
        decay_tol=decay_tol,
    )


def _point_vacuum(u_amp=0.5, w_amp=0.5, h_amp=1.0, p_amp=1.0, rho_bar=1.0, decay_tol=1e-8):
    return InitialData(
        rho0_fn=lambda y: y * y / (1.0 + y * y),
        u0_fn=lambda y: u_amp * np.sin(0.5 * np.pi * y) * _gauss(y),
        omega0_fn=lambda y: _pair(w_amp * _gauss(y, 1.0, 0.3), np.zeros_like(y)),
        h0_fn=lambda y: _pair(h_amp * _gauss(y, 0.8), 0.5 * h_amp * _gauss(y, 0.8, 0.4)),
        P0_fn=lambda y: p_amp * _gauss(y),
        rho_bar=rho_bar,
        decay_tol=decay_tol,
    )


def _transverse_only(w_amp=0.5, h_amp=1.0, rho_bar=1.0, decay_tol=1e-8):
    return InitialData(
        rho0_fn=lambda y: np.ones_like(y),
        omega0_fn=lambda y: _pair(w_amp * np.sin(0.5 * np.pi * y) * _gauss(y, 1.5),
                                  np.zeros_like(y)),
        h0_fn=lambda y: _pair(h_amp * _gauss(y, 1.5), 0.5 * h_amp * _gauss(y, 1.5, 0.5)),
        rho_bar=rho_bar,
        decay_tol=decay_tol,
    )


def _defaults(fn):
    import inspect

    return {k: p.default for k, p in inspect.signature(fn).parameters.items()}


PRESETS = {
    p.name: p
    for p in (
        Preset("quiescent", "uniform density at rest, no field, no pressure",
               _quiescent, -4.0, 4.0, 64, dt_max=0.05, defaults=_defaults(_quiescent)),
        Preset("smooth-large-data",
               "non-vacuum smooth data: sinusoidal u0/omega0, Gaussian h0 and P0",
               _smooth, -16.0, 16.0, 1024, dt_max=2.5e-3, defaults=_defaults(_smooth)),
        Preset("vacuum-patch", "compactly supported density max(0, 1 - y^2)",
               _vacuum_patch, -12.0, 12.0, 1024, dt_max=2.5e-3, boundary_tol=0.1,
               defaults=_defaults(_vacuum_patch)),
        Preset("density-jump", "piecewise-constant density with a jump at y = 0",
               _density_jump, -16.0, 16.0, 1024, dt_max=2.5e-3,
               defaults=_defaults(_density_jump)),
        Preset("point-vacuum", "density y^2/(1+y^2) vanishing at one point",
               _point_vacuum, -16.0, 16.0, 1025, dt_max=2.5e-3,
               defaults=_defaults(_point_vacuum)),
        Preset("transverse-only", "u0 = 0, P0 = 0, unit density: transverse field/velocity coupling",
               _transverse_only, -12.0, 12.0, 512, dt_max=1e-3,
               defaults=_defaults(_transverse_only)),
    )
}


def presets() -> list:
    return sorted(PRESETS)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(presets())}") from None
