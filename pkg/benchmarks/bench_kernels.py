"""Compiled vs pure-Python kernel timings.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best of N wall-clock times per kernel and the speed-up. Without
the built extension only the fallback column is shown.
"""
import argparse
import math
import timeit

import numpy as np

from gatemonlab._kernels import _fallback

try:
    from gatemonlab._kernels import _core
except ImportError:
    _core = None


def bloch_case():
    state0 = np.array([0.0, 0.0, -1.0])
    t_out = np.linspace(0.0, 500.0, 251)
    # 30 MHz rectangular drive, 2 MHz detuning, T1 = 102 ns, T2 = 94.3 ns
    args = (2 * math.pi * 0.030, 0.0, 2 * math.pi * 0.002, 1 / 102.0, 1 / 94.3, -1.0, 0,
            500.0, 125.0)
    return lambda mod: mod.integrate_bloch(state0, t_out, 0.01, *args)


def field_case():
    rng = np.random.default_rng(0)
    v = np.linspace(-3.56, -3.52, 4001)
    k = rng.standard_normal(64) / 0.002
    phi = rng.uniform(0.0, 2 * math.pi, 64)
    return lambda mod: mod.cosine_field(v, k, phi, 0.05)


CASES = {"integrate_bloch (50k RK4 steps)": bloch_case(),
         "cosine_field (4001 x 64 modes)": field_case()}


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'kernel':34s} {'python (s)':>11s} {'cython (s)':>11s} {'speed-up':>9s}")
    for name, case in CASES.items():
        t_py = best(lambda: case(_fallback), args.repeat)
        if _core is None:
            print(f"{name:34s} {t_py:11.4f} {'n/a':>11s} {'n/a':>9s}")
            continue
        assert np.allclose(case(_core), case(_fallback), atol=1e-12)
        t_c = best(lambda: case(_core), max(args.repeat, 5))
        print(f"{name:34s} {t_py:11.4f} {t_c:11.5f} {t_py / t_c:8.0f}x")


if __name__ == "__main__":
    main()
