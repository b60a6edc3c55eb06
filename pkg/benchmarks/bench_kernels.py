"""Numba vs pure-numpy timings for the hot kernels and one end-to-end run.

    python3 benchmarks/bench_kernels.py [--repeat N] [--n-points N]

Kernel timings import both backends side by side; the end-to-end case
runs a stochastic ensemble in a child process per backend, since the
backend is picked once at import from SQHA_DISABLE_NUMBA.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from sqha.kernels import _numba, _numpy

END_TO_END = r"""
import json, math, time, warnings
warnings.simplefilter("ignore")
from sqha import kernels
from sqha.dynamics import EvolutionConfig, evolve_stochastic
from sqha.fields import Grid1D
from sqha.noise import NoiseSpec
from sqha.oscillator import HOSpec, ho_wave
g = Grid1D.symmetric(6, 0.01)
p = HOSpec().params(temperature=(math.pi / 2) ** 3 / 2 / 0.25)
ec = EvolutionConfig(1e-3, 400, "stochastic", 50, NoiseSpec.from_params(p, mu=1e-28, seed=1))
evolve_stochastic(ho_wave(HOSpec(), g), p, EvolutionConfig(1e-3, 2, "stochastic", 1, ec.noise))  # warm-up
t = time.perf_counter()
run = evolve_stochastic(ho_wave(HOSpec(), g), p, ec)
print(json.dumps({"backend": kernels.BACKEND, "seconds": time.perf_counter() - t,
                  "final": [run.states[-1].values.real.sum(), run.states[-1].values.imag.sum()]}))
"""


def cases(n: int, rng: np.random.Generator):
    w = 2
    ab = np.zeros((2 * w + 1, n), dtype=complex)
    ab[w] = 2.5 + 0.3j
    for k in range(1, w + 1):
        ab[w - k, k:] = -0.4 / k + 0.05j
        ab[w + k, :-k] = -0.4 / k + 0.05j
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    signal = rng.standard_normal(n + 120)
    kernel = np.exp(-2 * np.linspace(-3, 3, 121) ** 2)
    values = np.sin(np.linspace(0, 20, n))
    q = rng.uniform(0.5, n - 2.5, 64)
    lu_nb, lu_np = _numba.band_factor(ab, w), _numpy.band_factor(ab, w)
    return {
        "band_factor": (lambda m: m.band_factor(ab, w)),
        "band_solve": (lambda m: m.band_solve(lu_nb if m is _numba else lu_np, w, b)),
        "band_matvec": (lambda m: m.band_matvec(ab, w, b)),
        "convolve_valid": (lambda m: m.convolve_valid(signal, kernel)),
        "cubic_interp": (lambda m: m.cubic_interp(values, 0.0, 1.0, q)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--n-points", type=int, default=4001)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'numba [us]':>12}{'numpy [us]':>12}{'speedup':>9}{'max |diff|':>12}")
    for name, call in cases(args.n_points, rng).items():
        a, b = call(_numba), call(_numpy)   # also triggers compilation
        # factor layouts are backend-private; band_solve checks them
        diff = float(np.max(np.abs(a - b))) if a.shape == b.shape else float("nan")
        t_nb = min(timeit.repeat(lambda: call(_numba), number=1, repeat=args.repeat)) * 1e6
        t_np = min(timeit.repeat(lambda: call(_numpy), number=1, repeat=args.repeat)) * 1e6
        print(f"{name:<16}{t_nb:>12.1f}{t_np:>12.1f}{t_np / t_nb:>9.2f}{diff:>12.2e}")
    print("(numpy band_factor only copies; scipy refactors inside every band_solve)")

    if args.skip_end_to_end:
        return
    print("\nstochastic evolution, 1201 points, 400 steps")
    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, SQHA_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))
    for r in results:
        print(f"  {r['backend']:<6} {r['seconds']:8.3f} s")
    drift = max(abs(x - y) for x, y in zip(results[0]["final"], results[1]["final"]))
    print(f"  speedup {results[1]['seconds'] / results[0]['seconds']:.2f}x, final-state checksum difference {drift:.2e}")


if __name__ == "__main__":
    main()
