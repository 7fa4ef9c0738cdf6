"""Benchmark the hot kernels under numba against the pure-numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--repeats N]

Each mode runs in a subprocess so the STDQA_NO_NUMBA flag is picked up at
import time. The numba timings exclude compilation (one warm-up call per
kernel before measuring).
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _measure(repeats):
    import numpy as np

    from stdqa.nncore import kernels

    rng = np.random.default_rng(0)
    L, D, H, T = 24, 64, 64, 13
    X = rng.normal(size=(L, D))
    wx = rng.normal(size=(4 * H, D)) * 0.1
    wh = rng.normal(size=(4 * H, H)) * 0.1
    b = rng.normal(size=4 * H) * 0.1
    dH = rng.normal(size=(L, H))
    em = rng.normal(size=(L, T))
    trans = rng.normal(size=(T, T))
    start = rng.normal(size=T)
    end = rng.normal(size=T)
    ones = np.ones(T, dtype=np.uint8)
    allowed = np.ones((T, T), dtype=np.uint8)

    H_seq, C_seq, G = kernels.lstm_forward(X, wx, wh, b)
    cases = {
        "lstm_forward": lambda: kernels.lstm_forward(X, wx, wh, b),
        "lstm_backward": lambda: kernels.lstm_backward(X, wx, wh, G, C_seq, H_seq, dH),
        "crf_marginals": lambda: kernels.crf_marginals(em, trans, start, end),
        "viterbi": lambda: kernels.viterbi_kernel(em, trans, start, end, ones, allowed),
    }
    results = {}
    for name, fn in cases.items():
        fn()  # warm-up (numba compilation / cache load)
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        results[name] = (time.perf_counter() - t0) / repeats
    return {"numba": kernels.NUMBA_ENABLED, "timings": results}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        print(json.dumps(_measure(args.repeats)))
        return

    reports = {}
    for mode, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, STDQA_NO_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True, check=True,
        )
        reports[mode] = json.loads(out.stdout.strip().splitlines()[-1])
        assert reports[mode]["numba"] == (mode == "numba"), f"mode {mode} misconfigured"

    print(f"{'kernel':<16}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name in reports["numba"]["timings"]:
        nb = reports["numba"]["timings"][name]
        np_ = reports["numpy"]["timings"][name]
        print(f"{name:<16}{nb * 1e6:>10.1f}us{np_ * 1e6:>10.1f}us{np_ / nb:>9.1f}x")


if __name__ == "__main__":
    main()
