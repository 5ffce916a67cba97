"""Second-order operators on the staggered grid.

All operators act along axis 0, so transverse 2-vectors of shape ``(m, 2)``
are handled component-wise without special casing.
"""
from __future__ import annotations

import numpy as np

from .errors import ValidationError

ZERO_VALUE = "zero-value"
ZERO_GRADIENT = "zero-gradient"


def _check(arr, expected, what):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape[0] != expected:
        raise ValidationError(f"{what}: expected {expected} sites, got {arr.shape[0]}")
    return arr


def d_center_of_faces(f, dy: float, n_cells: int | None = None) -> np.ndarray:
    """Face field -> cell-centred derivative ``(f[i+1] - f[i]) / dy``."""
    f = np.asarray(f, dtype=np.float64)
    if n_cells is not None:
        _check(f, n_cells + 1, "d_center_of_faces")
    if f.shape[0] < 2:
        raise ValidationError("d_center_of_faces needs at least two faces")
    return (f[1:] - f[:-1]) / dy


def d_face_of_centers(g, dy: float, bc: str = ZERO_VALUE, n_cells: int | None = None) -> np.ndarray:
    """Cell field -> face derivative.

    Interior faces use ``(g[i] - g[i-1]) / dy``.  The boundary faces see a
    ghost cell that is either 0 (``zero-value``) or a copy of the adjacent
    cell (``zero-gradient``).
    """
    g = np.asarray(g, dtype=np.float64)
    if n_cells is not None:
        _check(g, n_cells, "d_face_of_centers")
    out = np.empty((g.shape[0] + 1,) + g.shape[1:])
    out[1:-1] = (g[1:] - g[:-1]) / dy
    if bc == ZERO_VALUE:
        out[0] = g[0] / dy
        out[-1] = -g[-1] / dy
    elif bc == ZERO_GRADIENT:
        out[0] = 0.0
        out[-1] = 0.0
    else:
        raise ValidationError(f"unknown boundary rule {bc!r}")
    return out


def avg_center_to_face(g, n_cells: int | None = None) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if n_cells is not None:
        _check(g, n_cells, "avg_center_to_face")
    out = np.empty((g.shape[0] + 1,) + g.shape[1:])
    out[1:-1] = 0.5 * (g[1:] + g[:-1])
    out[0] = g[0]
    out[-1] = g[-1]
    return out


def avg_face_to_center(f, n_cells: int | None = None) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if n_cells is not None:
        _check(f, n_cells + 1, "avg_face_to_center")
    return 0.5 * (f[1:] + f[:-1])


def trapezoid_weights(m: int) -> np.ndarray:
    """Unit-spacing trapezoidal weights for ``m`` equally spaced nodes."""
    w = np.ones(m)
    w[0] = w[-1] = 0.5
    return w
