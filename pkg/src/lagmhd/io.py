"""Output formats: NDJSON report series and columnar snapshot files.

A snapshot file is::

    # {"coordinate_system": "lagrangian", "t": ..., "grid": {...}, ...}
    y kind vacuum J u omega1 omega2 h1 h2 P rho0 rho G F1 F2 H
    -16 face 0 nan 0 0 0 nan nan nan nan nan nan nan nan nan
    -15.984375 cell 0 1 nan nan nan 0 0 0 1 1 0 0 0 0
    ...

Every site gets one row; fields that do not live at a site kind are ``nan``.
``vacuum`` is 1 where the (face-averaged) initial density is zero: velocities
there come from the mass-floor regularization and carry no physical meaning.
Floats are written with 17 significant digits so files round-trip exactly.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import compute_fluxes
from .errors import ValidationError
from .eulerian import EulerianSnapshot
from .ops import avg_center_to_face
from .state import FluidState, MaterialParams

LAGRANGIAN_COLUMNS = ("y", "kind", "vacuum", "J", "u", "omega1", "omega2", "h1", "h2", "P",
                      "rho0", "rho", "G", "F1", "F2", "H")
EULERIAN_COLUMNS = ("x", "kind", "rho", "u", "omega1", "omega2", "h1", "h2", "P", "J")


def _fmt(v) -> str:
    return "%.17g" % v


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats by strings so the output stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, default=_json_default, allow_nan=False)


def _restore(obj):
    if isinstance(obj, str) and obj in ("nan", "inf", "-inf"):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_restore(v) for v in obj]
    return obj


def write_ndjson(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read_ndjson(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(_restore(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
    return out


def _header(kind: str, t: float, grid, params: MaterialParams, extra=None) -> dict:
    head = {
        "coordinate_system": kind,
        "t": float(t),
        "grid": {"y_min": grid.y_min, "y_max": grid.y_max, "n_cells": grid.n_cells},
        "params": {"mu": params.mu, "lambda": params.lam, "gamma": params.gamma},
        "version": __version__,
    }
    if extra:
        head.update(extra)
    return head


def _write_table(path, header: dict, columns, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + dumps(header) + "\n")
        fh.write(" ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(row) + "\n")


def write_snapshot(path, state: FluidState, params: MaterialParams, extra=None) -> None:
    """Lagrangian snapshot: all state fields plus ``G``, ``F`` and ``H``."""
    fl = compute_fluxes(state, params)
    grid = state.grid
    vac_f = avg_center_to_face(state.rho0) == 0.0
    vac_c = state.rho0 == 0.0
    yf, yc = grid.faces, grid.centers
    nan = "nan"
    rows = []
    n = grid.n_cells
    for i in range(n + 1):
        rows.append([_fmt(yf[i]), "face", str(int(vac_f[i])), nan, _fmt(state.u[i]),
                     _fmt(state.omega[i, 0]), _fmt(state.omega[i, 1])] + [nan] * 9)
        if i < n:
            rows.append([
                _fmt(yc[i]), "cell", str(int(vac_c[i])), _fmt(state.J[i]), nan, nan, nan,
                _fmt(state.h[i, 0]), _fmt(state.h[i, 1]), _fmt(state.P[i]),
                _fmt(state.rho0[i]), _fmt(state.rho[i]), _fmt(fl.G[i]),
                _fmt(fl.F[i, 0]), _fmt(fl.F[i, 1]), _fmt(fl.H[i]),
            ])
    _write_table(path, _header("lagrangian", state.t, grid, params, extra), LAGRANGIAN_COLUMNS,
                 rows)


def write_eulerian_snapshot(path, snap: EulerianSnapshot, grid, params: MaterialParams,
                            extra=None) -> None:
    cols = snap.columns()
    rows = [[_fmt(snap.x[k]), "point"] + [_fmt(cols[c][k]) for c in EULERIAN_COLUMNS[2:]]
            for k in range(len(snap.x))]
    _write_table(path, _header("eulerian", snap.t, grid, params, extra), EULERIAN_COLUMNS, rows)


def read_snapshot(path):
    """Returns ``(header, columns)``; ``columns['kind']`` is an array of strings."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValidationError(f"{path}: missing JSON header line")
        header = _restore(json.loads(first[2:]))
        names = fh.readline().split()
        rows = [line.split() for line in fh if line.strip()]
    cols = {}
    for k, name in enumerate(names):
        vals = [r[k] for r in rows]
        cols[name] = np.array(vals) if name == "kind" else np.array(vals, dtype=np.float64)
    return header, cols


def snapshot_path(out_dir, index: int, kind: str = "lagrangian") -> Path:
    suffix = "" if kind == "lagrangian" else "_eulerian"
    return Path(out_dir) / f"snapshot_{index:04d}{suffix}.txt"
