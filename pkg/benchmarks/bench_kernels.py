"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]

Each kernel is timed on both backends with identical inputs; outputs are
checked for equality before any timing is reported. The last block runs the
full rotation search in a subprocess per backend (``ERGOTRACK_PURE_PYTHON``).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ergotrack import kernels
from ergotrack.dynsys import GOLDEN_MEAN, IIDBinary, sample

END_TO_END = """
import time
from ergotrack import kernels
from ergotrack.quantized import RotationFamily, estimate_theta, generate
run = generate(2 ** 0.5 / 4, 0.2, {n}, 7)
t = time.perf_counter()
est = estimate_theta(run.observed, RotationFamily.from_spacing("{step}", "1e-3"))
print(kernels.BACKEND, time.perf_counter() - t, est.theta_hat)
"""


def cases(quick):
    n = 5000 if quick else 50000
    y = sample(IIDBinary(0.5, seed=1), n)
    adj = np.asarray(GOLDEN_MEAN.adjacency, dtype=np.uint8)
    cost = np.where(y[:, None] == np.arange(2)[None, :], 0.0, 1.0)
    alive = np.ones(2, dtype=np.uint8)
    return {
        f"rotation_mismatch_counts_exact n={n} m=1000":
            ("rotation_mismatch_counts_exact", (7071, 20000, 0, 1000, 1000, y)),
        f"rotation_mismatch_counts n={n} m=1000":
            ("rotation_mismatch_counts", (0.3535533905932738, 0.0, 1000.0, 1000, y)),
        f"sft_min_cost_path n={n}":
            ("sft_min_cost_path", (adj, cost, alive)),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, z) for x, z in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="small inputs, skip the end-to-end run")
    args = ap.parse_args(argv)
    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy backend is available", file=sys.stderr)
    print(f"{'kernel':48s} " + " ".join(f"{b:>12s}" for b in backends) + "   speedup")
    for label, (fn, fargs) in cases(args.quick).items():
        outs = {b: getattr(m, fn)(*fargs) for b, m in backends.items()}
        ref = outs["python"]
        if not all(same(ref, o) for o in outs.values()):
            raise SystemExit(f"{label}: backends disagree")
        times = {b: min(timeit.repeat(lambda m=m: getattr(m, fn)(*fargs), number=1, repeat=args.repeat))
                 for b, m in backends.items()}
        speed = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else ""
        print(f"{label:48s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times.values()) + f"  {speed}")
    if args.quick:
        return 0
    print("\nend to end: estimate_theta, n = 50000, theta step 1e-3")
    for pure in ("0", "1") if "cython" in backends else ("1",):
        env = dict(os.environ, ERGOTRACK_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", END_TO_END.format(n=50000, step="1e-3")],
                             env=env, capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:8s} {float(out[1]):8.2f}s  theta_hat = {out[2]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
