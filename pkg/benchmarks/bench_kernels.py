"""Time the compiled kernels against the numpy fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Both backends
are imported directly, so the environment switch is not needed.
"""

import argparse
import timeit

import numpy as np

from gsanatomy import _kernels_py

try:
    from gsanatomy import _kernels as compiled
except ImportError:
    compiled = None


def cases():
    s = np.linspace(-6.5, 2.18, 1025)
    wf = np.exp(-0.5 * s**2) * (s[1] - s[0]) / 3
    t = np.linspace(-7.0, 10.0, 1025)
    stage_n = np.array([100, 100], dtype=np.int64)
    bounds = np.array([2.18, 2.18])
    return {
        "mixture cdf (1025 x 1025)": lambda k: k.normal_mix_cdf(t, s, wf, 0.7071, 0.1, 0.7071),
        "mixture pdf (1025 x 1025)": lambda k: k.normal_mix_pdf(t, s, wf, 0.7071, 0.1, 0.7071),
        "outcomes (10^4 x 100)": lambda k: k.outcomes(1, 0, 10_000, 100, 0.2, 1.0),
        "simulate (10^5 trials, n=100+100)": lambda k: k.simulate_block(1, 0, 100_000, 0.2, 1.0, stage_n, bounds),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": _kernels_py}
    if compiled is not None:
        backends["compiled"] = compiled
    print(f"{'kernel':36s}" + "".join(f"{name:>12s}" for name in backends) + "     speedup")
    for label, fn in cases().items():
        times = {name: min(timeit.repeat(lambda k=k: fn(k), number=1, repeat=args.repeat))
                 for name, k in backends.items()}
        speedup = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{label:36s}" + "".join(f"{times[n]:11.4f}s" for n in backends) + f"{speedup:11.2f}x")


if __name__ == "__main__":
    main()
