"""numba vs numpy timings for the hot kernels.

    python benchmarks/bench_kernels.py [--batch 8192] [--repeat 5]

Each backend runs in a fresh interpreter because the backend is chosen at
import time from EIGENCONE_DISABLE_JIT.
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from eigencone import kernels
from eigencone.field import w5
from eigencone.hyperbolicity import difference_batch
from eigencone.sampling import draw_block

batch, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
A = rng.standard_normal((batch, 5, 5)); A = (A + A.transpose(0, 2, 1)) / 2
S = rng.standard_normal((batch, 5, 5)); S = (S - S.transpose(0, 2, 1)) / 2

def best(fn):
    fn()  # warm-up (JIT compile or cache load)
    ts = []
    for _ in range(repeat):
        t = time.perf_counter(); fn(); ts.append(time.perf_counter() - t)
    return min(ts)

def block():
    X, Y, O = draw_block(0, 0, batch, 5)
    M, *_ = difference_batch(w5(), X, Y, O)
    return kernels.eigvalsh_batch(M)

out = {
    "backend": kernels.backend_name(),
    "jacobi_s": best(lambda: kernels.eigvalsh_batch(A)),
    "expm_s": best(lambda: kernels.expm_batch(S)),
    "sample_block_s": best(block),
    "eig": kernels.eigvalsh_batch(A[:64]).tolist(),
}
print(json.dumps(out))
"""


def run(batch, repeat, disable):
    env = dict(os.environ, EIGENCONE_DISABLE_JIT="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", CHILD, str(batch), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=8192)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    jit = run(args.batch, args.repeat, disable=False)
    ref = run(args.batch, args.repeat, disable=True)
    import numpy as np

    agree = float(np.abs(np.array(jit["eig"]) - np.array(ref["eig"])).max())
    print(f"batch of {args.batch} 5x5 matrices, best of {args.repeat}")
    print(f"{'kernel':<16}{jit['backend']:>12}{ref['backend']:>12}{'speedup':>10}")
    for key, label in (("jacobi_s", "jacobi eig"), ("expm_s", "expm"), ("sample_block_s", "sample block")):
        print(f"{label:<16}{jit[key] * 1e3:>10.2f}ms{ref[key] * 1e3:>10.2f}ms{ref[key] / jit[key]:>9.1f}x")
    print(f"max |eig_numba - eig_numpy| on 64 matrices: {agree:.1e}")


if __name__ == "__main__":
    main()
