"""Benchmark the numba kernels against the pure-numpy fallback.

Two views:

* kernel microbenchmarks, importing both backend modules side by side;
* end-to-end stepping throughput, one subprocess per backend so the
  ENTRODIFF_BACKEND selection happens at import time as in real use.

Run:  python benchmarks/bench_backends.py  [--cells 256] [--steps 2000]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from entrodiff.kernels import REACTION_ATOL, REACTION_RTOL
from entrodiff.kernels import numpy_backend

try:
    from entrodiff.kernels import numba_backend
except ImportError:
    numba_backend = None

ALPHA = np.array([1, 1, 1], dtype=np.int64)


def timeit(fn, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(ncells: int) -> None:
    rng = np.random.default_rng(0)
    a = np.ascontiguousarray(rng.uniform(0.3, 2.0, size=(3, ncells)))
    u = rng.uniform(0.3, 2.0, size=(8, ncells))

    backends = [("numpy", numpy_backend)]
    if numba_backend is not None:
        numba_backend.reaction_cells(a, 1e-3, ALPHA, 1e-12,
                                     REACTION_RTOL, REACTION_ATOL, 1000)  # compile
        numba_backend.backward_euler_tridiagonal(u, 0.5)
        backends.append(("numba", numba_backend))

    print(f"kernel microbenchmarks ({ncells} cells, best of 5)")
    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    rows = {
        "reaction_cells(dt=1e-3)": lambda mod: mod.reaction_cells(
            a, 1e-3, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 1000),
        "reaction_cells(dt=0.5)": lambda mod: mod.reaction_cells(
            a, 0.5, ALPHA, 1e-12, REACTION_RTOL, REACTION_ATOL, 10_000),
        "tridiagonal(8 rhs)": lambda mod: mod.backward_euler_tridiagonal(u, 0.5),
    }
    for label, call in rows.items():
        times = [timeit(lambda m=mod: call(m)) for _, mod in backends]
        line = f"{label:<28}" + "".join(f"{t * 1e6:>10.1f}us" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


_END_TO_END_SNIPPET = """
import time
import numpy as np
import entrodiff as ed
from entrodiff.kernels import active_backend

spec = ed.SystemSpec(alpha=(1, 1), d=(0.0, 1.0, 1.0))
grid = ed.Grid(lengths=(1.0,), n=({cells},))
state = ed.cosine_perturbed_state(spec, grid, [2.0, 2.0], species=1, amplitude=0.3)
cfg = ed.StepperConfig(dt=1e-3)
ed.run(state.copy(), spec, grid, cfg, 5e-3, 5)  # warm up / compile
t0 = time.perf_counter()
ed.run(state, spec, grid, cfg, {steps} * 1e-3, 10**9)
dt = time.perf_counter() - t0
print(f"{{active_backend()}}: {{dt:.3f}}s for {steps} steps "
      f"({{1e6 * dt / {steps}:.1f}} us/step)")
"""


def bench_end_to_end(ncells: int, steps: int) -> None:
    print(f"\nend-to-end Strang stepping ({ncells} cells, {steps} steps, dt=1e-3)")
    for backend in ("numpy", "numba"):
        env = dict(os.environ, ENTRODIFF_BACKEND=backend)
        snippet = _END_TO_END_SNIPPET.format(cells=ncells, steps=steps)
        proc = subprocess.run([sys.executable, "-c", snippet], env=env,
                              capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend}: unavailable ({proc.stderr.strip().splitlines()[-1]})")
        else:
            print(proc.stdout.strip())


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=256)
    ap.add_argument("--steps", type=int, default=2000)
    args = ap.parse_args()
    bench_kernels(args.cells)
    bench_end_to_end(args.cells, args.steps)


if __name__ == "__main__":
    main()
