"""Positivity-preserving IMEX time stepping for the Lagrangian system.

One step, in order:

1. backward-Euler solve for ``u`` and ``omega`` with the viscous operators
   frozen at the current ``J`` and lumped mass ``(rho0 + eps) / dt``;
   pressure and magnetic forcing are explicit;
2. ``h`` by exact integration of its linear decay with the new gradients;
3. ``P`` by exponential decay plus nonnegative viscous heating;
4. ``J`` either by the trapezoidal rule on ``J_t = u_y`` or by the
   exponential form ``J_t = J (G + P + H/8pi) / lam``.

Steps 2-4 keep ``P >= 0`` and (in exponential mode) ``J > 0`` structurally.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .diagnostics import compute_fluxes
from .errors import LinearSolveError, NonPositiveJacobian, SolverError, ValidationError
from .ops import (
    ZERO_GRADIENT,
    ZERO_VALUE,
    avg_center_to_face,
    d_center_of_faces,
    d_face_of_centers,
)
from .state import EIGHT_PI, FOUR_PI, FluidState, MaterialParams

J_MODES = ("ode", "exponential")
MAX_HALVINGS = 10


@dataclass(frozen=True)
class StepConfig:
    """Time-step control.

    ``mass_floor`` is added to ``rho0`` only inside the implicit solves; when
    left as ``None`` it resolves to ``1e-6 * rho_bar`` via :meth:`resolved`.
    """

    cfl: float = 0.4
    dt_max: float = 1e-2
    mass_floor: Optional[float] = None
    j_update_mode: str = "ode"
    implicit_tol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValidationError(f"cfl must be in (0, 1], got {self.cfl}")
        if not self.dt_max > 0:
            raise ValidationError("dt_max must be > 0")
        if self.mass_floor is not None and self.mass_floor < 0:
            raise ValidationError("mass_floor must be >= 0")
        if self.j_update_mode not in J_MODES:
            raise ValidationError(f"j_update_mode must be one of {J_MODES}")
        if not self.implicit_tol > 0:
            raise ValidationError("implicit_tol must be > 0")

    def resolved(self, rho_bar: float) -> "StepConfig":
        if self.mass_floor is not None:
            return self
        return StepConfig(self.cfl, self.dt_max, 1e-6 * rho_bar, self.j_update_mode,
                          self.implicit_tol)

    @property
    def eps(self) -> float:
        return 0.0 if self.mass_floor is None else float(self.mass_floor)


@dataclass(frozen=True)
class Tendencies:
    dJ_dt: np.ndarray       # cells
    momentum_u: np.ndarray  # faces, force density (not divided by rho0)
    momentum_w: np.ndarray  # faces, (n+1, 2)
    dh_dt: np.ndarray       # cells, (n, 2)
    dP_dt: np.ndarray       # cells


def _require_positive_J(J):
    if not np.all(J > 0):
        i = int(np.argmin(J))
        raise NonPositiveJacobian(i, J[i])


def assemble_rhs(state: FluidState, params: MaterialParams) -> Tendencies:
    """Right-hand sides of the five Lagrangian equations at their native sites."""
    J = state.J
    _require_positive_J(J)
    dy = state.grid.dy
    lam, mu, gamma = params.lam, params.mu, params.gamma

    uy = d_center_of_faces(state.u, dy)
    wy = d_center_of_faces(state.omega, dy)
    s = uy / J
    a = wy / J[:, None]

    h_f = avg_center_to_face(state.h)
    hy_f = d_face_of_centers(state.h, dy, ZERO_VALUE)
    mom_u = (
        d_face_of_centers(lam * s, dy, ZERO_GRADIENT)
        - d_face_of_centers(state.P, dy, ZERO_VALUE)
        - np.einsum("ij,ij->i", h_f, hy_f) / FOUR_PI
    )
    mom_w = d_face_of_centers(mu * a, dy, ZERO_GRADIENT) + hy_f / FOUR_PI
    dh = a - s[:, None] * state.h
    dP = -gamma * s * state.P + (gamma - 1.0) * (lam * s * s + mu * np.einsum("ij,ij->i", a, a))
    return Tendencies(uy, mom_u, mom_w, dh, dP)


def stable_dt(state: FluidState, params: MaterialParams, cfg: StepConfig) -> float:
    """Largest step allowed by the explicit parts of the scheme, capped at ``dt_max``.

    Rates per cell: compression ``gamma |u_y/J|``, transverse shear
    ``|omega_y/J|``, explicit pressure/magnetic-pressure forcing against the
    implicit longitudinal viscosity ``(gamma P + |h|^2/4pi) / (2 lam)`` and the
    explicit field-line tension against the implicit shear viscosity
    ``1/(8 pi mu)`` (only where transverse fields are present).  The last two
    bounds do not involve ``rho0`` and therefore survive vacuum.
    """
    dy = state.grid.dy
    J = state.J
    s = np.abs(d_center_of_faces(state.u, dy) / J)
    wy = d_center_of_faces(state.omega, dy) / J[:, None]
    shear = np.sqrt(np.einsum("ij,ij->i", wy, wy))
    H = state.H
    rate = np.maximum(params.gamma * s, shear)
    rate = np.maximum(rate, (params.gamma * state.P + H / FOUR_PI) / (2.0 * params.lam))
    transverse = (H > 0) | (shear > 0)
    if np.any(transverse):
        rate = np.maximum(rate, np.where(transverse, 1.0 / (EIGHT_PI * params.mu), 0.0))
    r = float(rate.max())
    if r == 0.0:
        return float(cfg.dt_max)
    return float(min(cfg.dt_max, cfg.cfl / r))


def _implicit_solve(mass, kappa, rhs, dy, dt, tol):
    """Solve ``(mass/dt) x - D_f(kappa D_c x) = rhs`` on interior faces, x = 0 at the ends.

    ``mass`` and ``rhs`` are interior-face arrays (n-1 entries), ``kappa`` is
    per cell (n entries); ``rhs`` has shape ``(n-1, k)``.
    """
    c = dt / (dy * dy)
    lower = -c * kappa[:-1]
    upper = -c * kappa[1:]
    diag = mass + c * (kappa[:-1] + kappa[1:])
    b = dt * rhs
    try:
        x = _kernels.thomas(lower, diag, upper, np.ascontiguousarray(b))
    except (ZeroDivisionError, np.linalg.LinAlgError) as exc:
        raise LinearSolveError(f"tridiagonal solve broke down: {exc}") from None
    # residual check: the solve is direct, so this only trips on breakdown
    r = diag[:, None] * x - b
    r[1:] += lower[1:, None] * x[:-1]
    r[:-1] += upper[:-1, None] * x[1:]
    scale = max(np.abs(b).max(), np.abs(diag[:, None] * x).max(), 1e-300)
    err = np.abs(r).max() / scale if np.all(np.isfinite(x)) else np.inf
    if not err <= tol:
        raise LinearSolveError(f"tridiagonal residual {err:.3e} exceeds implicit_tol {tol:.1e}")
    return x


def solve_velocities(state: FluidState, params: MaterialParams, cfg: StepConfig, dt: float):
    """Implicit part of the step: new face velocities ``u`` and ``omega``."""
    n = state.grid.n_cells
    dy = state.grid.dy
    J = state.J
    _require_positive_J(J)
    mass = avg_center_to_face(state.rho0)[1:-1] + cfg.eps

    # explicit forcing on interior faces; viscous parts are implicit
    hy_f = d_face_of_centers(state.h, dy, ZERO_VALUE)[1:-1]
    h_f = avg_center_to_face(state.h)[1:-1]
    force_u = -(state.P[1:] - state.P[:-1]) / dy - np.einsum("ij,ij->i", h_f, hy_f) / FOUR_PI
    force_w = hy_f / FOUR_PI

    rhs_u = (mass * state.u[1:-1] / dt + force_u)[:, None]
    rhs_w = mass[:, None] * state.omega[1:-1] / dt + force_w

    u_new = np.zeros(n + 1)
    w_new = np.zeros((n + 1, 2))
    u_new[1:-1] = _implicit_solve(mass, params.lam / J, rhs_u, dy, dt, cfg.implicit_tol)[:, 0]
    w_new[1:-1] = _implicit_solve(mass, params.mu / J, rhs_w, dy, dt, cfg.implicit_tol)
    return u_new, w_new


def step(state: FluidState, params: MaterialParams, cfg: StepConfig, dt: float) -> FluidState:
    """Advance one IMEX step of size ``dt``; returns a new state."""
    if not dt > 0:
        raise ValidationError("dt must be > 0")
    _require_positive_J(state.J)
    dy = state.grid.dy
    J = state.J

    u_new, w_new = solve_velocities(state, params, cfg, dt)
    uy_old = d_center_of_faces(state.u, dy)
    uy = d_center_of_faces(u_new, dy)
    wy = d_center_of_faces(w_new, dy)

    h_new, P_new = _kernels.cell_update(
        np.ascontiguousarray(state.h), np.ascontiguousarray(state.P), uy,
        np.ascontiguousarray(wy), np.ascontiguousarray(J), float(dt),
        params.gamma, params.lam, params.mu,
    )

    if cfg.j_update_mode == "ode":
        J_new = J + dt * 0.5 * (uy_old + uy)
        _require_positive_J(J_new)
    else:
        # J = exp( (1/lam) int (G + P + H/8pi) dt ), trapezoidal over the step
        def rate(st):
            fl = compute_fluxes(st, params)
            return fl.G + st.P + fl.H / EIGHT_PI

        mid = _with_velocities(state, u_new, w_new)
        J_new = J * np.exp(0.5 * dt * (rate(state) + rate(mid)) / params.lam)

    new = FluidState(
        grid=state.grid, t=state.t + dt, J=J_new, u=u_new, omega=w_new,
        h=h_new, P=P_new, rho0=state.rho0,
    )
    if not new.is_finite():
        raise SolverError(f"non-finite values after step at t = {state.t:.6g}")
    return new


def _with_velocities(state, u, omega):
    return FluidState(grid=state.grid, t=state.t, J=state.J, u=u, omega=omega,
                      h=state.h, P=state.P, rho0=state.rho0)


def advance(state: FluidState, params: MaterialParams, cfg: StepConfig, dt: float):
    """:func:`step` with the halving retry on ``J <= 0``.

    Returns ``(new_state, dt_taken)``.
    """
    for _ in range(MAX_HALVINGS + 1):
        try:
            return step(state, params, cfg, dt), dt
        except NonPositiveJacobian as exc:
            last = exc
            dt *= 0.5
    raise SolverError(f"J <= 0 persists after {MAX_HALVINGS} halvings: {last}")
