"""Time the device integrators on each available kernel backend.

Usage: python benchmarks/bench_kernels.py [--seconds 10] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from graintouch import kernels


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seconds", type=float, default=10.0, help="force track length in s")
    ap.add_argument("--rate", type=int, default=8000)
    ap.add_argument("--substeps", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    n = int(args.seconds * args.rate)
    t = np.arange(n) / args.rate
    force = 0.14 + 0.72 * (np.sin(2 * np.pi * 0.5 * t) > 0.9)
    dt = 1.0 / (args.rate * args.substeps)

    jobs = {
        "ct": lambda k: k.ct_integrate(force, 0.14, 0.02, 500.0, 2.0, dt, args.substeps),
        "ksfr": lambda k: k.ksfr_integrate(force - 0.14, 0.1, 0.1, 0.2, 8.0, dt, args.substeps),
    }
    print(f"{n} samples x {args.substeps} substeps, best of {args.repeat}")
    print(f"{'kernel':<6} {'backend':<8} {'seconds':>10} {'Msteps/s':>9}")
    best = {}
    for job, fn in jobs.items():
        for name in sorted(kernels.BACKENDS):
            mod = kernels.get_backend(name)
            secs = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
            best[job, name] = secs
            print(f"{job:<6} {name:<8} {secs:>10.4f} {n * args.substeps / secs / 1e6:>9.2f}")
    if "cython" in kernels.BACKENDS:
        for job in jobs:
            print(f"{job}: cython speedup x{best[job, 'python'] / best[job, 'cython']:.0f}")


if __name__ == "__main__":
    main()
