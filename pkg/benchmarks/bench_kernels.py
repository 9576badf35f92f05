"""Time the compiled and pure-Python geodesic kernels on the same flows.

    python benchmarks/bench_kernels.py [--steps 20000] [--repeat 3]
"""

import argparse
import time

import numpy as np

from srharmonic.algebra import heisenberg_algebra
from srharmonic.kernels import BACKENDS


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()

    print(f"{'algebra':<8} {'backend':<9} {'seconds':>9} {'steps/s':>12} {'speedup':>8} {'max |diff|':>11}")
    for n in (1, 2, 4):
        st = heisenberg_algebra(n)[1]
        d = st.dim
        lam0 = np.linspace(0.5, 1.5, d)
        lam0[-1] = 2 * np.pi
        run = {name: (lambda f=mod.rkmk4_flow: f(st.algebra.structure_constants, st.sharp_matrix, np.zeros(d), lam0,
                                    1.0 / args.steps, args.steps))
               for name, mod in BACKENDS.items()}
        results = {name: best_of(fn, args.repeat) for name, fn in run.items()}
        ref_t, ref_out = results["python"]
        for name, (t, out) in results.items():
            diff = max(np.max(np.abs(out[0] - ref_out[0])), np.max(np.abs(out[1] - ref_out[1])))
            print(f"h_{n:<6} {name:<9} {t:9.4f} {args.steps / t:12.0f} {ref_t / t:8.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
