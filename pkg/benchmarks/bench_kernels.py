"""Compare the numba kernels against the numpy/scipy fallback.

    python benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 200]

Times the two hot kernels in isolation and one full solver step per backend,
and checks that both backends produce the same numbers.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lagmhd import _kernels


def _tridiag(rng, m, k):
    lower = -rng.uniform(0.1, 1.0, m)
    upper = -rng.uniform(0.1, 1.0, m)
    diag = 1.0 + np.abs(lower) + np.abs(upper)
    return lower, diag, upper, rng.normal(size=(m, k))


def _cell(rng, n):
    return (rng.normal(size=(n, 2)), rng.uniform(0, 2, n), rng.normal(size=n),
            rng.normal(size=(n, 2)), rng.uniform(0.5, 2, n), 1e-3, 1.4, 2.0, 1.0)


def bench_kernels(sizes, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':12s} {'n':>6s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>8s}")
    for n in sizes:
        tri = _tridiag(rng, n, 2)
        cell = _cell(rng, n)
        for name, fa, fb, args in (
            ("thomas", _kernels.thomas_numba, _kernels.thomas_numpy, tri),
            ("cell_update", _kernels.cell_update_numba, _kernels.cell_update_numpy, cell),
        ):
            a, b = fa(*args), fb(*args)
            for x, y in zip(np.atleast_1d(a) if name == "thomas" else a,
                            np.atleast_1d(b) if name == "thomas" else b):
                np.testing.assert_allclose(x, y, rtol=1e-10, atol=1e-12)
            ta = min(timeit.repeat(lambda: fa(*args), number=repeat, repeat=3)) / repeat
            tb = min(timeit.repeat(lambda: fb(*args), number=repeat, repeat=3)) / repeat
            print(f"{name:12s} {n:6d} {ta * 1e6:10.1f} {tb * 1e6:10.1f} {tb / ta:8.2f}")


STEP_SNIPPET = """
import time
from lagmhd import _kernels
from lagmhd.config import RunConfig
from lagmhd.state import discretize
from lagmhd.stepper import step
from dataclasses import replace
cfg = RunConfig.from_preset("smooth-large-data")
cfg = replace(cfg, grid=replace(cfg.grid, n_cells={n}))
s = discretize(cfg.initial_data(), cfg.grid)
st = cfg.resolved_step()
s = step(s, cfg.params, st, 1e-3)  # warm-up (jit compile / cache load)
t0 = time.perf_counter()
for _ in range({steps}):
    s = step(s, cfg.params, st, 1e-3)
dt = (time.perf_counter() - t0) / {steps}
print(_kernels.backend(), dt, float(s.J.sum()))
"""


def bench_steps(sizes, steps):
    print(f"\n{'full step':12s} {'n':>6s} {'numba us':>10s} {'numpy us':>10s} {'speedup':>8s}")
    for n in sizes:
        res = {}
        for flag in ("0", "1"):
            out = subprocess.run(
                [sys.executable, "-c", STEP_SNIPPET.format(n=n, steps=steps)],
                env={**os.environ, "LAGMHD_DISABLE_NUMBA": flag},
                capture_output=True, text=True, check=True).stdout.split()
            res[out[0]] = (float(out[1]), float(out[2]))
        assert abs(res["numba"][1] - res["numpy"][1]) <= 1e-9 * abs(res["numpy"][1])
        ta, tb = res["numba"][0], res["numpy"][0]
        print(f"{'step':12s} {n:6d} {ta * 1e6:10.1f} {tb * 1e6:10.1f} {tb / ta:8.2f}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--steps", type=int, default=100)
    args = ap.parse_args(argv)
    if not _kernels.USE_NUMBA:
        sys.exit("numba is disabled or missing; nothing to compare")
    bench_kernels(args.sizes, args.repeat)
    bench_steps(args.sizes, args.steps)


if __name__ == "__main__":
    main()
