"""Timing comparison of the pure-python and compiled kernel backends.

The microbenchmark section imports both kernel modules side by side and
times each hot function on identical arrays. The end-to-end section runs
the full carre du champ pipeline in a subprocess per backend, because the
backend choice is baked in at import time (LENTPARTICLE_BACKEND).

Run from the repo root after an editable install:

    python benchmarks/bench_backends.py
    python benchmarks/bench_backends.py --sizes 10 60 200 --repeats 300
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lentparticle import _kernels_py as kpy
from lentparticle import rng

try:
    from lentparticle import _kernels_cy as kcy
except ImportError:
    kcy = None


def _arrays(m, index=0, seed=20240811):
    gen = rng.stream(seed, rng.SYNTHETIC, 5000 + index)
    jumps = gen.normal(0.0, 0.8, size=m)
    j2 = gen.normal(0.0, 0.8, size=m)
    return jumps, j2


def _cases(m):
    jumps, j2 = _arrays(m)
    pos = m // 2
    return [
        ("stoch_value", (jumps, 2, 1.0, 1.3, 0.0)),
        ("stoch_inserted_value", (jumps, pos, 0.3, 2, 1.0, 1.3, 0.0)),
        ("stoch_gamma_coeffs", (jumps, 2, 1.0, 1.3, 0.0)),
        ("sup_value", (jumps, 0.0)),
        ("sup_insert_parts", (jumps, 0.0, pos)),
        ("triangular_value", (jumps, j2, 0.5, -0.3, 0.9)),
        ("triangular_gamma", (jumps, j2, 0.5)),
    ]


def time_call(fn, args, repeats):
    """Best-of-5 mean time per call, in microseconds."""
    timer = timeit.Timer(lambda: fn(*args))
    best = min(timer.repeat(repeat=5, number=repeats))
    return 1e6 * best / repeats


def bench_kernels(sizes, repeats):
    print(f"kernel microbenchmarks (best of 5 x {repeats} calls, usec/call)")
    header = f"{'kernel':<22} {'m':>5} {'python':>10}"
    if kcy is not None:
        header += f" {'cython':>10} {'speedup':>8}"
    print(header)
    for m in sizes:
        for name, args in _cases(m):
            t_py = time_call(getattr(kpy, name), args, repeats)
            line = f"{name:<22} {m:>5} {t_py:>10.2f}"
            if kcy is not None:
                t_cy = time_call(getattr(kcy, name), args, repeats)
                line += f" {t_cy:>10.2f} {t_py / t_cy:>7.1f}x"
            print(line)
    print()


_END_TO_END = r"""
import time

from lentparticle._backend import BACKEND
from lentparticle.intensity import PowerLawMeasure, levy_structure
from lentparticle.lent_particle import carre_du_champ
from lentparticle.functionals import StochIntegral
from lentparticle.point_process import sample_configuration
from lentparticle.registry import get_smooth

measure = PowerLawMeasure(T=1.0, eps=1e-3, beta=0.5, c=1.0)
structure = levy_structure(1)
F = StochIntegral(get_smooth("sin"))
configs = [sample_configuration(measure, 42, index=i) for i in range(N_CONFIGS)]

best = float("inf")
for _ in range(3):
    t0 = time.perf_counter()
    for config in configs:
        carre_du_champ(F, config, structure, mode="analytic")
    best = min(best, time.perf_counter() - t0)
print(f"{BACKEND} {best:.6f}")
"""


def bench_end_to_end(n_configs):
    print(f"end-to-end carre du champ, {n_configs} power-law configs "
          "(eps 1e-3, mean ~61 atoms), best of 3")
    script = _END_TO_END.replace("N_CONFIGS", str(n_configs))
    times = {}
    backends = ["python"] + (["cython"] if kcy is not None else [])
    for backend in backends:
        env = dict(os.environ, LENTPARTICLE_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", script], env=env,
                             capture_output=True, text=True, check=True)
        name, secs = out.stdout.split()
        assert name == backend, f"subprocess ran {name}, wanted {backend}"
        times[backend] = float(secs)
        print(f"  {backend:<8} {times[backend]:.3f} s")
    if len(times) == 2:
        print(f"  speedup  {times['python'] / times['cython']:.1f}x")
    print()


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare the python and cython kernel backends")
    parser.add_argument("--sizes", type=int, nargs="+", default=[10, 60, 200],
                        help="jump-stream lengths for the microbenchmarks")
    parser.add_argument("--repeats", type=int, default=300,
                        help="calls per timing sample")
    parser.add_argument("--configs", type=int, default=300,
                        help="configurations for the end-to-end run")
    args = parser.parse_args(argv)
    if kcy is None:
        print("compiled backend not built; timing the python backend only\n")
    bench_kernels(args.sizes, args.repeats)
    bench_end_to_end(args.configs)
    # sanity: identical results on a shared input, so the timings are comparable
    if kcy is not None:
        jumps, j2 = _arrays(60)
        assert np.allclose(kpy.stoch_gamma_coeffs(jumps, 2, 1.0, 1.3, 0.0),
                           kcy.stoch_gamma_coeffs(jumps, 2, 1.0, 1.3, 0.0))
        assert np.allclose(kpy.triangular_gamma(jumps, j2, 0.5),
                           kcy.triangular_gamma(jumps, j2, 0.5))
        print("parity spot check passed")


if __name__ == "__main__":
    main()
