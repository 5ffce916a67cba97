"""Grid, material parameters and state containers for planar Lagrangian MHD.

Layout on the staggered grid::

    faces   0     1     2           n-1    n
            |--x--|--x--|-- ... --|--x--|
    cells      0     1              n-1

``J, rho0, P, h`` live at cell centres, ``u, omega`` at faces.  ``h`` and
``omega`` are transverse 2-vectors stored with shape ``(m, 2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ValidationError

FOUR_PI = 4.0 * np.pi
EIGHT_PI = 8.0 * np.pi


def _frozen(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, copy=True)
    if shape is not None and arr.shape != shape:
        raise ValidationError(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MaterialParams:
    """Nondimensional material constants (R = 1, longitudinal field b1 = 1).

    ``lam`` is the effective longitudinal viscosity ``lambda' + 2 mu``.
    """

    mu: float = 1.0
    lam: float = 1.0
    gamma: float = 1.4
    four_pi: float = field(default=FOUR_PI, init=False)

    def __post_init__(self):
        if not self.mu > 0:
            raise ValidationError(f"mu must be > 0, got {self.mu}")
        if not self.lam > 0:
            raise ValidationError(f"lambda must be > 0, got {self.lam}")
        if not self.gamma > 1:
            raise ValidationError(f"gamma must be > 1, got {self.gamma}")


@dataclass(frozen=True)
class LagrangianGrid:
    y_min: float
    y_max: float
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValidationError(f"n_cells must be an integer >= 2, got {self.n_cells}")
        if not self.y_max > self.y_min:
            raise ValidationError("y_max must exceed y_min")

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.n_cells

    @property
    def faces(self) -> np.ndarray:
        return self.y_min + (np.arange(self.n_cells + 1) * self.length) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        # (2i+1) L / 2n keeps the symmetric midpoint exact for odd n
        return self.y_min + ((2 * np.arange(self.n_cells) + 1) * self.length) / (2 * self.n_cells)

    @property
    def length(self) -> float:
        return self.y_max - self.y_min

    def refined(self, factor: int = 2) -> "LagrangianGrid":
        return replace(self, n_cells=self.n_cells * factor)


@dataclass(frozen=True, eq=False)
class FluidState:
    """One time level of the evolved fields plus the frozen initial density.

    Arrays are copied and made read-only on construction.  The current
    density is never stored; use :attr:`rho`.
    """

    grid: LagrangianGrid
    t: float
    J: np.ndarray
    u: np.ndarray
    omega: np.ndarray
    h: np.ndarray
    P: np.ndarray
    rho0: np.ndarray

    def __post_init__(self):
        n = self.grid.n_cells
        set_ = object.__setattr__
        set_(self, "J", _frozen(self.J, (n,)))
        set_(self, "u", _frozen(self.u, (n + 1,)))
        set_(self, "omega", _frozen(self.omega, (n + 1, 2)))
        set_(self, "h", _frozen(self.h, (n, 2)))
        set_(self, "P", _frozen(self.P, (n,)))
        set_(self, "rho0", _frozen(self.rho0, (n,)))
        if not np.all(self.J > 0):
            i = int(np.argmin(self.J))
            raise ValidationError(f"J must be > 0 everywhere (J[{i}] = {self.J[i]})")
        if not np.all(self.P >= 0):
            i = int(np.argmin(self.P))
            raise ValidationError(f"P must be >= 0 everywhere (P[{i}] = {self.P[i]})")
        if not np.all(self.rho0 >= 0):
            raise ValidationError("rho0 must be >= 0 everywhere")

    @property
    def rho(self) -> np.ndarray:
        return self.rho0 / self.J

    @property
    def H(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.h, self.h)

    def evolve(self, **fields) -> "FluidState":
        """Copy with some fields replaced; ``rho0`` and ``grid`` cannot change."""
        if "rho0" in fields or "grid" in fields:
            raise ValidationError("rho0 and grid are immutable along a trajectory")
        return replace(self, **fields)

    def is_finite(self) -> bool:
        return all(
            bool(np.all(np.isfinite(a))) for a in (self.J, self.u, self.omega, self.h, self.P)
        )


def _zero(y):
    return np.zeros_like(y)


def _zero_vec(y):
    return np.zeros((len(y), 2))


@dataclass(frozen=True)
class InitialData:
    """Sampling functions of the Lagrangian coordinate; ``J0`` is identically 1.

    Vector-valued functions (``omega0_fn``, ``h0_fn``) return ``(len(y), 2)``.
    ``decay_tol`` is relative to each field's maximum magnitude.
    """

    rho0_fn: Callable[[np.ndarray], np.ndarray]
    u0_fn: Callable[[np.ndarray], np.ndarray] = _zero
    omega0_fn: Callable[[np.ndarray], np.ndarray] = _zero_vec
    h0_fn: Callable[[np.ndarray], np.ndarray] = _zero_vec
    P0_fn: Callable[[np.ndarray], np.ndarray] = _zero
    rho_bar: float = 1.0
    decay_tol: float = 1e-8


def _vec(values, m) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (m,):
        arr = np.stack([arr, np.zeros(m)], axis=1)
    if arr.shape != (m, 2):
        raise ValidationError(f"vector field must have shape ({m}, 2), got {arr.shape}")
    return arr


def _scalar(values, m) -> np.ndarray:
    arr = np.broadcast_to(np.asarray(values, dtype=np.float64), (m,))
    return np.array(arr)


def boundary_decay_violations(fields: dict, tol: float, width: int = 1) -> list:
    """Names of fields whose outermost ``width`` sites exceed ``tol * max|field|``.

    Each entry of ``fields`` is ``(values, offset)`` where ``offset`` skips
    sites that are pinned by the boundary condition (1 for face velocities).
    """
    bad = []
    for name, (values, offset) in fields.items():
        mag = np.abs(values) if values.ndim == 1 else np.linalg.norm(values, axis=1)
        scale = mag.max() if mag.size else 0.0
        if scale == 0.0:
            continue
        m = len(mag)
        edge = np.concatenate([mag[offset : offset + width], mag[m - offset - width : m - offset]])
        if edge.max() > tol * scale:
            bad.append(name)
    return bad


def discretize(init: InitialData, grid: LagrangianGrid) -> FluidState:
    """Sample ``init`` on the staggered grid; ``t = 0`` and ``J = 1``."""
    yc, yf = grid.centers, grid.faces
    n = grid.n_cells
    rho0 = _scalar(init.rho0_fn(yc), n)
    P0 = _scalar(init.P0_fn(yc), n)
    u0 = _scalar(init.u0_fn(yf), n + 1)
    w0 = _vec(init.omega0_fn(yf), n + 1)
    h0 = _vec(init.h0_fn(yc), n)

    for name, arr in (("rho0", rho0), ("P0", P0), ("u0", u0), ("omega0", w0), ("h0", h0)):
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{name} has non-finite samples")
    if np.any(rho0 < 0):
        raise ValidationError(f"rho0 has negative samples (min {rho0.min():.3e})")
    if np.any(rho0 > init.rho_bar):
        raise ValidationError(f"rho0 exceeds rho_bar = {init.rho_bar} (max {rho0.max():.3e})")
    if np.any(P0 < 0):
        raise ValidationError(f"P0 has negative samples (min {P0.min():.3e})")
    bad = boundary_decay_violations(
        {"u0": (u0, 0), "omega0": (w0, 0), "h0": (h0, 0), "P0": (P0, 0)}, init.decay_tol
    )
    if bad:
        raise ValidationError(
            f"initial data does not decay toward the box edges: {', '.join(bad)} "
            f"(decay_tol = {init.decay_tol:g}); enlarge the domain"
        )
    return FluidState(grid=grid, t=0.0, J=np.ones(n), u=u0, omega=w0, h=h0, P=P0, rho0=rho0)


def total_mass(state: FluidState) -> float:
    """Total mass; equals ``sum(rho0) * dy`` at every time since ``rho J = rho0``."""
    return float(np.sum(state.rho0) * state.grid.dy)


def make_state(grid: LagrangianGrid, *, J=None, u=None, omega=None, h=None, P=None,
               rho0=None, t: float = 0.0) -> FluidState:
    """Build a state from raw arrays, defaulting missing fields to a quiescent value."""
    n = grid.n_cells
    return FluidState(
        grid=grid,
        t=t,
        J=np.ones(n) if J is None else _scalar(J, n),
        u=np.zeros(n + 1) if u is None else _scalar(u, n + 1),
        omega=np.zeros((n + 1, 2)) if omega is None else _vec(omega, n + 1),
        h=np.zeros((n, 2)) if h is None else _vec(h, n),
        P=np.zeros(n) if P is None else _scalar(P, n),
        rho0=np.ones(n) if rho0 is None else _scalar(rho0, n),
    )

