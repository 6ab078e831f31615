"""Compare the compiled kernel backend against the pure-Python fallback.

Two layers are timed:

* the three raw kernels (`simulate_sigma2`, `garch_paths` with full
  derivatives, and the fused objective `masked_negloglik_grad`), imported
  side by side from both backend modules in this process;
* end-to-end `fit_window` and a small `scan`, each run in a subprocess with
  GARCHSUP_BACKEND forced, since the backend is chosen once at import time.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--n 2000] [--repeats 7]
"""
import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from garchsup import GarchParams, InnovationDist, ShockSpec, simulate
from garchsup._kernels import _core, pyfallback

THETA = GarchParams(0.3, (0.4,), (0.5,))


def median_time(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def kernel_rows(n, repeats):
    x = simulate(ShockSpec(THETA), n, InnovationDist("normal"), seed=7).x
    x2 = np.ascontiguousarray(x * x)
    theta_arr = np.ascontiguousarray(THETA.as_array())
    rng = np.random.default_rng(7)
    z2 = np.ascontiguousarray(rng.standard_normal(n + 1000) ** 2)
    fp = THETA.alpha0 / (1.0 - THETA.alphas[0] - THETA.betas[0])

    workloads = [
        ("simulate_sigma2", lambda impl: impl.simulate_sigma2(
            z2, theta_arr, theta_arr, 1, 1, 0, 0, 1000, fp)),
        ("garch_paths (grad+hess)", lambda impl: impl.garch_paths(
            x2, theta_arr, 1, 1, n, True, True)),
        ("masked_negloglik_grad", lambda impl: impl.masked_negloglik_grad(
            x2, theta_arr, 1, 1, 0, n, False, float(n))),
    ]
    rows = []
    for name, call in workloads:
        t_c = median_time(lambda: call(_core), repeats)
        t_p = median_time(lambda: call(pyfallback), repeats)
        rows.append((name, t_c, t_p))
    return rows


_E2E_SNIPPET = """
import time
import numpy as np
from garchsup import (InnovationDist, GarchParams, ParameterSpace, SearchGrid,
                      ShockSpec, Window, backend_name, fit_window, scan,
                      simulate)
theta = GarchParams(0.3, (0.4,), (0.5,))
x = simulate(ShockSpec(theta), {n}, InnovationDist("normal"), seed=7).x
space = ParameterSpace(1, 1)
fit_window(x, Window(0.0, 1.0, len(x)), space)   # warm-up (import costs)
t0 = time.perf_counter()
for _ in range(3):
    fit_window(x, Window(0.0, 1.0, len(x)), space)
t_fit = (time.perf_counter() - t0) / 3
t0 = time.perf_counter()
scan(x, (0, 1, 1), SearchGrid(L=10), space, null_ref=1.0)
t_scan = time.perf_counter() - t0
print(backend_name(), t_fit, t_scan)
"""


def end_to_end_rows(n):
    out = {}
    for backend in ("cython", "python"):
        env = dict(os.environ, GARCHSUP_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET.format(n=n)],
            capture_output=True, text=True, env=env, check=True)
        name, t_fit, t_scan = proc.stdout.split()
        assert name == backend, f"backend selection failed: {proc.stdout}"
        out[backend] = (float(t_fit), float(t_scan))
    return [
        (f"fit_window (full, n={n})", out["cython"][0], out["python"][0]),
        (f"scan (L=10, n={n})", out["cython"][1], out["python"][1]),
    ]


def print_table(title, rows):
    print(f"\n{title}")
    print(f"  {'workload':<28}{'cython':>12}{'python':>12}{'speedup':>10}")
    for name, t_c, t_p in rows:
        print(f"  {name:<28}{t_c * 1e3:>10.3f}ms{t_p * 1e3:>10.3f}ms"
              f"{t_p / t_c:>9.1f}x")


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="Benchmark the compiled kernels against the fallback.")
    parser.add_argument("--n", type=int, default=2000,
                        help="series length for the kernel workloads")
    parser.add_argument("--repeats", type=int, default=7,
                        help="repetitions per kernel (median reported)")
    parser.add_argument("--e2e-n", type=int, default=1000,
                        help="series length for the end-to-end workloads")
    args = parser.parse_args(argv)

    print(f"backends: compiled extension vs pure-Python fallback "
          f"(median of {args.repeats})")
    print_table(f"raw kernels (n={args.n})", kernel_rows(args.n, args.repeats))
    print_table("end-to-end (subprocess per backend)",
                end_to_end_rows(args.e2e_n))


if __name__ == "__main__":
    main()
