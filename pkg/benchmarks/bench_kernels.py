"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from latticemc.kernels import implementations
from latticemc.samplers.klein import KleinParams
from latticemc.lattice import GeneratorMatrix


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=200_000)
    ap.add_argument("--klein-d", type=int, default=50)
    ap.add_argument("--klein-n", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    w = rng.normal(size=args.steps)
    log_u = np.log(rng.random(args.steps))
    kp = KleinParams(GeneratorMatrix(np.eye(args.klein_d) + np.triu(rng.normal(scale=0.3, size=(args.klein_d,) * 2), 1)), 1.5)
    uni = rng.random((args.klein_n, args.klein_d))
    kargs = (
        np.ascontiguousarray(kp.basis.entries.T),
        np.ascontiguousarray(kp.gso.T),
        kp.gso_sqnorm,
        kp.center,
        kp.sigma,
        uni,
    )

    impls = implementations()
    results = {}
    print(f"{'kernel':<14}{'impl':<8}{'seconds':>12}{'per item (us)':>16}")
    for name, mod in impls.items():
        t_sel = best_of(lambda: mod.imh_select(w, log_u, 0.0), args.repeat)
        t_kl = best_of(lambda: mod.klein_batch(*kargs), args.repeat)
        results[name] = (t_sel, t_kl)
        print(f"{'imh_select':<14}{name:<8}{t_sel:>12.5f}{1e6 * t_sel / args.steps:>16.4f}")
        print(f"{'klein_batch':<14}{name:<8}{t_kl:>12.5f}{1e6 * t_kl / args.klein_n:>16.2f}")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speed-up imh_select x{py[0] / cy[0]:.1f}, klein_batch x{py[1] / cy[1]:.1f}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
