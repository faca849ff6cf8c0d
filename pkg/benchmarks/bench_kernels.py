"""Compare the compiled and numpy kernels, plus one end-to-end oracle run.

    python3 benchmarks/bench_kernels.py [--rows N] [--repeat K]

The end-to-end part runs in a subprocess per backend so that
``ICHECK_PURE`` takes effect at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from icheck import kernels

END_TO_END = """
import time
from icheck import kernels
from icheck.oracle import EnumerationSpace, check_pre_test
from icheck.simplifier import plain_pre_test
from icheck.syntax import parse_update, theory
g = theory(":- p(X,Y), q(Y,X).", ":- q(X,X), not p(X,X).")
u = parse_update("+p(a,b).\\n-q(b,a).\\n+q(c,c).")
s = EnumerationSpace("abc", {"p": 2, "q": 2})
t = time.perf_counter()
v = check_pre_test(plain_pre_test(g, u).theory, g, u, s)
print(kernels.BACKEND, v.status.value, v.checked, round(time.perf_counter() - t, 3))
"""


def rows(rng, n, words):
    return rng.integers(0, 2**63, size=(n, words), dtype=np.uint64)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=1 << 16)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    n, words = args.rows, 2
    dbs = rows(rng, n, words)
    pos = rows(rng, 16, words) & rows(rng, 16, words) & rows(rng, 16, words)
    neg = rows(rng, 16, words) & rows(rng, 16, words) & ~pos
    positions = rng.choice(64 * words, size=20, replace=False).astype(np.int64)
    idx = rng.integers(0, 1 << 20, size=n, dtype=np.uint64)
    src = rng.permutation(64 * words).astype(np.int64)
    cases = {
        "violations": lambda m: m.violations(dbs, pos, neg),
        "expand": lambda m: m.expand(idx, positions, words),
        "permute": lambda m: m.permute(dbs, src),
    }
    mods = kernels.backends()
    if kernels.compiled is None:
        print("compiled extension not built; only the numpy backend is timed")
    print(f"{n} rows x {words} words, best of {args.repeat}")
    print(f"{'kernel':12}" + "".join(f"{m.BACKEND:>12}" for m in mods) + ("  speedup" if len(mods) > 1 else ""))
    for name, fn in cases.items():
        times = [min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for m in mods]
        line = f"{name:12}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) > 1:
            line += f"  {times[1] / times[0]:6.1f}x"
        print(line)
    print("\nend to end (pre-test check over 2^18 databases): backend, verdict, databases meeting the premise, seconds")
    for pure in ("0", "1"):
        env = dict(os.environ, ICHECK_PURE=pure)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True)
        print("  " + (out.stdout.strip() or out.stderr.strip().splitlines()[-1]))


if __name__ == "__main__":
    main()
