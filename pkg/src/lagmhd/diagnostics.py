"""Derived fluxes, conserved quantities and identity residuals.

Everything here is a pure function of immutable states (plus read-only
accumulators), so it can be evaluated on old snapshots while the next step
is being computed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ops import (
    ZERO_GRADIENT,
    avg_center_to_face,
    d_center_of_faces,
    d_face_of_centers,
    trapezoid_weights,
)
from .state import EIGHT_PI, FOUR_PI, FluidState, MaterialParams

DRIFT_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class DerivedFluxes:
    G: np.ndarray  # effective viscous flux, cells
    F: np.ndarray  # transverse effective viscous flux, cells (n, 2)
    H: np.ndarray  # |h|^2, cells


def compute_fluxes(state: FluidState, params: MaterialParams) -> DerivedFluxes:
    dy = state.grid.dy
    J = state.J
    uy = d_center_of_faces(state.u, dy)
    wy = d_center_of_faces(state.omega, dy)
    H = np.einsum("ij,ij->i", state.h, state.h)
    G = params.lam * uy / J - state.P - H / EIGHT_PI
    F = params.mu * wy / J[:, None] + state.h / FOUR_PI
    return DerivedFluxes(G=G, F=F, H=H)


# --------------------------------------------------------------------------
# energy and the Jacobian lower bound


def energy(state: FluidState, params: MaterialParams) -> float:
    """Kinetic + magnetic + internal energy.

    Face quantities use trapezoidal weights, cell quantities the midpoint sum.
    """
    dy = state.grid.dy
    rho_f = avg_center_to_face(state.rho0)
    w = trapezoid_weights(len(rho_f))
    kin = 0.5 * rho_f * (state.u**2 + np.einsum("ij,ij->i", state.omega, state.omega))
    cell = state.J * (state.H / EIGHT_PI + state.P / (params.gamma - 1.0))
    return float((np.dot(w, kin) + cell.sum()) * dy)


def energy0(initial: FluidState, params: MaterialParams) -> float:
    """Initial energy; ``initial`` must be the ``t = 0`` state (``J = 1``)."""
    return energy(initial, params)


def j_lower_bound_value(rho0_l1: float, e0: float, lam: float) -> float:
    return math.exp(-(2.0 * math.sqrt(2.0) / lam) * math.sqrt(rho0_l1 * e0))


def j_lower_bound(initial: FluidState, params: MaterialParams) -> float:
    """``exp(-(2 sqrt 2 / lam) sqrt(|rho0|_1 E0))``; depends only on initial data."""
    rho0_l1 = float(np.sum(initial.rho0) * initial.grid.dy)
    return j_lower_bound_value(rho0_l1, energy0(initial, params), params.lam)


# --------------------------------------------------------------------------
# identity residuals


def pressure_magnetic_source(state: FluidState) -> np.ndarray:
    """Integrand ``P + |h|^2/8pi`` of the time integral in the ln J identity."""
    return state.P + state.H / EIGHT_PI


def lnj_identity_residual(state: FluidState, initial: FluidState, params: MaterialParams,
                          time_integral: np.ndarray) -> np.ndarray:
    """Pointwise residual of ``lam ln J = int_{y_min}^y rho0 (u - u0) + int_0^t (P + H/8pi)``.

    The spatial integral at cell ``i`` sums faces ``0..i`` (all faces left of
    the cell centre).
    """
    if time_integral is None:
        raise ValueError("lnj_identity_residual needs the accumulated time integral")
    dy = state.grid.dy
    rho_f = avg_center_to_face(state.rho0)
    momentum = np.cumsum(rho_f * (state.u - initial.u) * dy)[:-1]
    return params.lam * np.log(state.J) - momentum - time_integral


def h_ode_residual(state: FluidState, fluxes: DerivedFluxes, dH_dt: np.ndarray,
                   params: MaterialParams) -> np.ndarray:
    H, G, F = fluxes.H, fluxes.G, fluxes.F
    lam, mu = params.lam, params.mu
    Fh = np.einsum("ij,ij->i", F, state.h)
    return (dH_dt + H * H / (FOUR_PI * lam) + H / (2.0 * np.pi * mu) + 2.0 * H * state.P / lam
            - 2.0 * Fh / mu + 2.0 * H * G / lam)


def p_ode_residual(state: FluidState, fluxes: DerivedFluxes, dP_dt: np.ndarray,
                   params: MaterialParams) -> np.ndarray:
    H, G, F = fluxes.H, fluxes.G, fluxes.F
    lam, mu, gamma = params.lam, params.mu, params.gamma
    c = 2.0 - gamma
    lhs = dP_dt + (state.P + 0.5 * c * G + c * H / (16.0 * np.pi)) ** 2 / lam
    d = F - state.h / FOUR_PI
    rhs = gamma**2 / (4.0 * lam) * (G + H / EIGHT_PI) ** 2 + (gamma - 1.0) / mu * np.einsum(
        "ij,ij->i", d, d)
    return lhs - rhs


def admissible_cells(state: FluidState, rho_min: float) -> np.ndarray:
    """Cells where the 1/rho0 diffusion terms are evaluated.

    Both adjacent faces and the cell itself must carry ``rho0 > rho_min``;
    the two boundary cells are always excluded (pinned boundary velocity).
    """
    rho_f = avg_center_to_face(state.rho0)
    ok = (state.rho0 > rho_min) & (rho_f[:-1] > rho_min) & (rho_f[1:] > rho_min)
    ok[0] = ok[-1] = False
    return ok


def _weighted_diffusion(g, state, coeff):
    """``(coeff / J) (g_y / rho0)_y`` at cells, rho0 averaged to faces."""
    dy = state.grid.dy
    rho_f = avg_center_to_face(state.rho0)
    gy = d_face_of_centers(g, dy, ZERO_GRADIENT)
    with np.errstate(divide="ignore", invalid="ignore"):
        flux = gy / (rho_f if gy.ndim == 1 else rho_f[:, None])
    flux = np.where(np.isfinite(flux), flux, 0.0)
    out = d_center_of_faces(flux, dy)
    return coeff * (out / state.J if out.ndim == 1 else out / state.J[:, None])


def _mid_state(old: FluidState, new: FluidState) -> FluidState:
    # new velocities with everything else at the old level: the fluxes the
    # implicit solve actually saw
    return FluidState(grid=old.grid, t=old.t, J=old.J, u=new.u, omega=new.omega,
                      h=old.h, P=old.P, rho0=old.rho0)


def _l2(values, mask, dy):
    v = values[mask]
    return float(np.sqrt(np.sum(v * v) * dy))


def g_equation_residual(old: FluidState, new: FluidState, params: MaterialParams,
                        rho_min: float, *, return_field: bool = False):
    """L2 residual (over admissible cells) of the parabolic effective-flux equation.

    ``G_t`` is the difference quotient across the step, the diffusion term is
    applied to the flux seen by the implicit solve, the reaction terms use the
    old level.
    """
    dt = new.t - old.t
    dy = old.grid.dy
    lam, mu, gamma = params.lam, params.mu, params.gamma
    f_old = compute_fluxes(old, params)
    f_new = compute_fluxes(new, params)
    f_mid = compute_fluxes(_mid_state(old, new), params)
    s = d_center_of_faces(old.u, dy) / old.J
    a = d_center_of_faces(old.omega, dy) / old.J[:, None]
    hw = np.einsum("ij,ij->i", old.h, a)
    rhs = (-gamma * s * f_old.G + (2.0 - gamma) / EIGHT_PI * s * f_old.H
           - (gamma - 1.0) * mu * np.einsum("ij,ij->i", a, a) - hw / FOUR_PI)
    r = (f_new.G - f_old.G) / dt - _weighted_diffusion(f_mid.G, old, lam) - rhs
    mask = admissible_cells(old, rho_min)
    if return_field:
        return r, mask
    return _l2(r, mask, dy)


def f_equation_residual(old: FluidState, new: FluidState, params: MaterialParams,
                        rho_min: float, *, return_field: bool = False):
    """L2 residual of the transverse effective-flux equation (same discretization as G)."""
    dt = new.t - old.t
    dy = old.grid.dy
    f_old = compute_fluxes(old, params)
    f_new = compute_fluxes(new, params)
    f_mid = compute_fluxes(_mid_state(old, new), params)
    s = d_center_of_faces(old.u, dy) / old.J
    a = d_center_of_faces(old.omega, dy) / old.J[:, None]
    rhs = -s[:, None] * f_old.F + a / FOUR_PI
    r = (f_new.F - f_old.F) / dt - _weighted_diffusion(f_mid.F, old, params.mu) - rhs
    mask = admissible_cells(old, rho_min)
    if return_field:
        return r, mask
    return _l2(np.sqrt(np.einsum("ij,ij->i", r, r)), mask, dy)


@dataclass(frozen=True)
class StepResiduals:
    h_ode_linf: float = 0.0
    p_ode_linf: float = 0.0
    g_eq_l2: float = 0.0
    f_eq_l2: float = 0.0
    excluded_cells: int = 0


def step_residuals(old: FluidState, new: FluidState, params: MaterialParams,
                   rho_min: float) -> StepResiduals:
    """All across-step residuals for one accepted step."""
    dt = new.t - old.t
    fl = compute_fluxes(old, params)
    dH = (new.H - old.H) / dt
    dP = (new.P - old.P) / dt
    mask = admissible_cells(old, rho_min)
    return StepResiduals(
        h_ode_linf=float(np.max(np.abs(h_ode_residual(old, fl, dH, params)))),
        p_ode_linf=float(np.max(np.abs(p_ode_residual(old, fl, dP, params)))),
        g_eq_l2=g_equation_residual(old, new, params, rho_min),
        f_eq_l2=f_equation_residual(old, new, params, rho_min),
        excluded_cells=int(mask.size - mask.sum()),
    )


# --------------------------------------------------------------------------
# monitored norms and the per-sample report

MONITOR_NAMES = (
    "sqrt_rho0_omega_l2", "sqrtJ_F_l2", "sqrtJ_G_l2", "h_l4", "h_linf", "P_linf", "J_linf",
    "h_y_l2", "P_y_l2", "u_y_l2", "omega_y_l2",
)


def monitor_norms(state: FluidState, params: MaterialParams,
                  fluxes: DerivedFluxes | None = None) -> dict:
    fl = compute_fluxes(state, params) if fluxes is None else fluxes
    dy = state.grid.dy
    rho_f = avg_center_to_face(state.rho0)
    w = trapezoid_weights(len(rho_f))
    hmag = np.sqrt(fl.H)
    hy = d_face_of_centers(state.h, dy)[1:-1]
    Py = d_face_of_centers(state.P, dy)[1:-1]
    uy = d_center_of_faces(state.u, dy)
    wy = d_center_of_faces(state.omega, dy)
    sq = lambda x: float(np.sqrt(np.sum(x) * dy))  # noqa: E731
    return {
        "sqrt_rho0_omega_l2": sq(w * rho_f * np.einsum("ij,ij->i", state.omega, state.omega)),
        "sqrtJ_F_l2": sq(state.J * np.einsum("ij,ij->i", fl.F, fl.F)),
        "sqrtJ_G_l2": sq(state.J * fl.G**2),
        "h_l4": float((np.sum(hmag**4) * dy) ** 0.25),
        "h_linf": float(hmag.max()),
        "P_linf": float(state.P.max()),
        "J_linf": float(state.J.max()),
        "h_y_l2": sq(np.einsum("ij,ij->i", hy, hy)),
        "P_y_l2": sq(Py**2),
        "u_y_l2": sq(uy**2),
        "omega_y_l2": sq(np.einsum("ij,ij->i", wy, wy)),
    }


@dataclass
class Accumulators:
    """Running quantities a trajectory needs for its reports."""

    initial: FluidState
    e0: float
    j_bound: float
    time_integral: np.ndarray
    last: StepResiduals = field(default_factory=StepResiduals)
    n_steps: int = 0
    j_min_run: float = 1.0
    p_min_run: float = 0.0

    @classmethod
    def start(cls, initial: FluidState, params: MaterialParams) -> "Accumulators":
        return cls(
            initial=initial,
            e0=energy0(initial, params),
            j_bound=j_lower_bound(initial, params),
            time_integral=np.zeros(initial.grid.n_cells),
            j_min_run=float(initial.J.min()),
            p_min_run=float(initial.P.min()),
        )

    def record_step(self, old: FluidState, new: FluidState, residuals: StepResiduals):
        dt = new.t - old.t
        self.time_integral = self.time_integral + 0.5 * dt * (
            pressure_magnetic_source(old) + pressure_magnetic_source(new))
        self.last = residuals
        self.n_steps += 1
        self.j_min_run = min(self.j_min_run, float(new.J.min()))
        self.p_min_run = min(self.p_min_run, float(new.P.min()))


@dataclass(frozen=True)
class InvariantReport:
    t: float
    energy: float
    energy_drift_rel: float
    j_min: float
    j_lower_bound: float
    p_min: float
    lnj_residual_Linf: float
    h_ode_residual_Linf: float
    p_ode_residual_Linf: float
    g_eq_residual_L2: float
    f_eq_residual_L2: float
    excluded_cells: int
    monitor_norms: dict
    mass: float
    mass_floor_used: float
    n_steps: int
    j_min_run: float
    p_min_run: float

    def to_dict(self) -> dict:
        return asdict(self)


def report(state: FluidState, params: MaterialParams, acc: Accumulators,
           mass_floor: float) -> InvariantReport:
    e = energy(state, params)
    lnj = lnj_identity_residual(state, acc.initial, params, acc.time_integral)
    return InvariantReport(
        t=float(state.t),
        energy=e,
        energy_drift_rel=abs(e - acc.e0) / max(acc.e0, DRIFT_FLOOR),
        j_min=float(state.J.min()),
        j_lower_bound=acc.j_bound,
        p_min=float(state.P.min()),
        lnj_residual_Linf=float(np.max(np.abs(lnj))),
        h_ode_residual_Linf=acc.last.h_ode_linf,
        p_ode_residual_Linf=acc.last.p_ode_linf,
        g_eq_residual_L2=acc.last.g_eq_l2,
        f_eq_residual_L2=acc.last.f_eq_l2,
        excluded_cells=acc.last.excluded_cells,
        monitor_norms=monitor_norms(state, params),
        mass=float(np.sum(state.rho0) * state.grid.dy),
        mass_floor_used=float(mass_floor),
        n_steps=acc.n_steps,
        j_min_run=acc.j_min_run,
        p_min_run=acc.p_min_run,
    )
