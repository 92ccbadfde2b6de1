"""Compare the numba and pure-numpy marching backends.

Run directly:

    python benchmarks/bench_backends.py [T] [dt]

The backend is fixed per process by the MEMEVO_BACKEND environment
variable, so the script re-invokes itself once per backend and prints a
small table. Numba warm-up (JIT compilation) is excluded by timing a
second run.
"""

import json
import os
import subprocess
import sys
import time


def run_case(T: float, dt: float) -> dict:
    import numpy as np

    from memevo import (
        ExtendedHistoryVector,
        ExtendedStateVector,
        InitialState,
        KernelSpec,
        WeightedField,
        backend,
        build_kernel,
        build_operator,
        evolve_history,
        evolve_state,
        history_grid,
        solve_direct,
        state_grid,
    )

    k = build_kernel(KernelSpec(family="exponential", a=1.0, kappa=1.0))
    op = build_operator("explicit-list", 4, lambdas=[1.0, 4.0, 9.0, 16.0])
    rng = np.random.default_rng(0)
    u0 = rng.standard_normal(4)
    v0 = rng.standard_normal(4)
    J = int(round(T / dt))

    results = {"backend": backend()}

    hgrid = history_grid(k, T, dt)
    eta0 = WeightedField(
        u0[:, None] * (1.0 - np.exp(-hgrid.points))[None, :], hgrid, "mu"
    )
    zbar = ExtendedHistoryVector(u0, v0, eta0)
    sgrid = state_grid(k, T, dt)
    xi0 = WeightedField(k.mu(sgrid.points)[None, :] * u0[:, None], sgrid, "nu")
    z = ExtendedStateVector(u0, v0, xi0)
    F0 = 0.5 * np.exp(-np.arange(J + 1) * dt)[None, :] * u0[:, None]
    state0 = InitialState(u0, v0, F0)

    for name, fn in (
        ("direct", lambda: solve_direct(state0, op, k, T, dt)),
        ("history", lambda: evolve_history(zbar, op, k, T, dt, stride=100)),
        ("state", lambda: evolve_state(z, op, k, T, dt, stride=100)),
    ):
        fn()  # warm-up (JIT compile on the numba backend)
        t0 = time.perf_counter()
        fn()
        results[name] = time.perf_counter() - t0
    return results


def main():
    T = float(sys.argv[1]) if len(sys.argv) > 1 else 5.0
    dt = float(sys.argv[2]) if len(sys.argv) > 2 else 1e-3
    if os.environ.get("_BENCH_CHILD"):
        print(json.dumps(run_case(T, dt)))
        return
    rows = []
    for backend in ("numba", "numpy"):
        env = dict(os.environ, MEMEVO_BACKEND=backend, _BENCH_CHILD="1")
        out = subprocess.run(
            [sys.executable, __file__, str(T), str(dt)],
            env=env, capture_output=True, text=True, check=True,
        )
        rows.append(json.loads(out.stdout.strip().splitlines()[-1]))
    print(f"T = {T}, dt = {dt} ({int(round(T / dt))} steps, 4 modes)")
    print(f"{'marcher':<10}" + "".join(f"{r['backend']:>12}" for r in rows))
    for name in ("direct", "history", "state"):
        print(f"{name:<10}" + "".join(f"{r[name]:>11.3f}s" for r in rows))


if __name__ == "__main__":
    main()
