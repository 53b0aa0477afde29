"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each case runs under both backends on identical inputs; the table reports
the best-of-``repeat`` wall time and the speedup of the compiled path.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from wnnsid import kernels
from wnnsid.pipeline import Denoiser, PipelineConfig
from wnnsid.sim_eval import experiment_data


def cases(rng):
    r, c, N = 15, 1, 271
    B = rng.standard_normal((r * c, N))
    P = rng.standard_normal((r * c, r * c))
    P = P @ P.T
    Q = rng.standard_normal((N, N))
    Q = Q @ Q.T
    A = rng.standard_normal((8, 8))
    A *= 0.9 / np.max(np.abs(np.linalg.eigvals(A)))
    drive = rng.standard_normal((1500, 8, 9))
    x0 = rng.standard_normal((8, 9))
    data = experiment_data(6, 4.0, 1)

    def sweep():
        # fresh map each run so the cached Gram matrix is rebuilt
        den = Denoiser(data.ident.u, data.ident.y, PipelineConfig())
        for lam in (0.01, 1.0, 100.0):
            den(lam)

    return {
        "hankel_adjoint r=15 N=271": lambda: kernels.hankel_adjoint(B, r, c, N + r - 1),
        "gram_assemble r=15 N=271": lambda: kernels.gram_assemble(P, Q, r, c, N),
        "state_recursion n=8 T=1500 b=9": lambda: kernels.state_recursion(A, drive, x0),
        "denoise setup + 3 solves (CVA)": sweep,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the timings here")
    args = ap.parse_args(argv)

    backends = kernels.available()
    if "compiled" not in backends:
        print("compiled extension not built; timing the fallback only", file=sys.stderr)
    results = {}
    for name, fn in cases(np.random.default_rng(0)).items():
        results[name] = {}
        for backend in backends:
            kernels.use(backend)
            fn()  # warm up
            number = 3
            best = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            results[name][backend] = best
    kernels.use(backends[0])

    width = max(map(len, results))
    print(f"{'case'.ljust(width)}  {'python':>11}  {'compiled':>11}  {'speedup':>8}")
    for name, t in results.items():
        py = t["python"]
        comp = t.get("compiled")
        cell = f"{comp * 1e3:9.3f}ms" if comp is not None else f"{'-':>11}"
        speed = f"{py / comp:7.1f}x" if comp else f"{'-':>8}"
        print(f"{name.ljust(width)}  {py * 1e3:9.3f}ms  {cell}  {speed}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
            fh.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
