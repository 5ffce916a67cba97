"""Hot inner loops, with numba and pure numpy/scipy implementations.

Set ``LAGMHD_DISABLE_NUMBA=1`` before import to force the fallback path.
Both implementations are always importable under explicit names so tests and
the benchmark can compare them directly.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.linalg

_FLAG = os.environ.get("LAGMHD_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def _maybe_njit(fn):
    if numba is None:  # pragma: no cover
        return fn
    return numba.njit(cache=True)(fn)


# --------------------------------------------------------------------------
# tridiagonal solve: lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]
# lower[0] and upper[-1] are ignored; rhs has shape (m, k).


def _thomas_py(lower, diag, upper, rhs):
    m = diag.shape[0]
    k = rhs.shape[1]
    cp = np.empty(m)
    dp = np.empty((m, k))
    beta = diag[0]
    cp[0] = upper[0] / beta
    for j in range(k):
        dp[0, j] = rhs[0, j] / beta
    for i in range(1, m):
        beta = diag[i] - lower[i] * cp[i - 1]
        cp[i] = upper[i] / beta if i < m - 1 else 0.0
        for j in range(k):
            dp[i, j] = (rhs[i, j] - lower[i] * dp[i - 1, j]) / beta
    x = np.empty((m, k))
    for j in range(k):
        x[m - 1, j] = dp[m - 1, j]
    for i in range(m - 2, -1, -1):
        for j in range(k):
            x[i, j] = dp[i, j] - cp[i] * x[i + 1, j]
    return x


thomas_numba = _maybe_njit(_thomas_py)


def thomas_numpy(lower, diag, upper, rhs):
    m = diag.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)


# --------------------------------------------------------------------------
# cell-centred explicit updates of h and P with already-updated gradients


def _cell_update_py(h, P, uy, wy, J, dt, gamma, lam, mu):
    n = P.shape[0]
    h_new = np.empty((n, 2))
    P_new = np.empty(n)
    for i in range(n):
        s = uy[i] / J[i]
        a0 = wy[i, 0] / J[i]
        a1 = wy[i, 1] / J[i]
        decay = np.exp(-dt * s)
        h_new[i, 0] = (h[i, 0] + dt * a0) * decay
        h_new[i, 1] = (h[i, 1] + dt * a1) * decay
        heat = lam * s * s + mu * (a0 * a0 + a1 * a1)
        P_new[i] = P[i] * np.exp(-gamma * dt * s) + dt * (gamma - 1.0) * heat
    return h_new, P_new


cell_update_numba = _maybe_njit(_cell_update_py)


def cell_update_numpy(h, P, uy, wy, J, dt, gamma, lam, mu):
    s = uy / J
    a = wy / J[:, None]
    h_new = (h + dt * a) * np.exp(-dt * s)[:, None]
    heat = lam * s * s + mu * np.einsum("ij,ij->i", a, a)
    P_new = P * np.exp(-gamma * dt * s) + dt * (gamma - 1.0) * heat
    return h_new, P_new


if USE_NUMBA:
    thomas = thomas_numba
    cell_update = cell_update_numba
else:
    thomas = thomas_numpy
    cell_update = cell_update_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
