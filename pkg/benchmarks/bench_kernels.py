"""Compare the compiled and pure-Python XOR k-closest kernels.

    python3 benchmarks/bench_kernels.py [--nodes 1000] [--queries 2000] [--k 20]
"""
from __future__ import annotations

import argparse
import random
import time

from decent.dht import kernels


def run(impl, ids, targets, k):
    table = impl.build_table(ids)
    t = time.perf_counter()
    out = [impl.closest(table, x, k) for x in targets]
    return time.perf_counter() - t, out


def main(argv=None) -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--queries", type=int, default=2000)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rnd = random.Random(args.seed)
    ids = [rnd.getrandbits(160) for _ in range(args.nodes)]
    targets = [rnd.getrandbits(160) for _ in range(args.queries)]

    py_s, py_out = run(kernels.python_backend, ids, targets, args.k)
    print(f"python   : {py_s * 1e6 / args.queries:9.1f} us/query")
    if kernels.compiled_backend is None:
        print("compiled : not built (run `pip install -e . --no-build-isolation`)")
        return
    c_s, c_out = run(kernels.compiled_backend, ids, targets, args.k)
    assert [sorted(a) for a in c_out] == [sorted(a) for a in py_out], "backends disagree"
    print(f"compiled : {c_s * 1e6 / args.queries:9.1f} us/query")
    print(f"speedup  : {py_s / c_s:9.1f}x  (N={args.nodes}, k={args.k})")


if __name__ == "__main__":
    main()
