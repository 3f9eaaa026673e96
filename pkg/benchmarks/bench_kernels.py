"""Compare the compiled GRU/SGNS kernels against the pure-Python fallback.

Runs this same script twice via subprocess: once with PIM_NUMBA=1 (default,
numba-compiled kernels) and once with PIM_NUMBA=0 (uncompiled fallback), then
prints wall times and verifies the encoder outputs agree to 1e-12 (the
compiled kernel may fuse multiply-adds, so the last bit can differ).

Usage: python benchmarks/bench_kernels.py
"""
import json
import os
import subprocess
import sys
import time


def _worker():
    import numpy as np
    from pathrep import encoder, graph

    rng = np.random.default_rng(0)
    d, h = 32, 32
    params = encoder.init_encoder(d, h, h, seed=0)
    view = rng.normal(size=(20, d))

    p = encoder.encode(params, view)  # includes compile time on first call
    t0 = time.perf_counter()
    reps = 300
    for _ in range(reps):
        p = encoder.encode(params, view)
    elapsed = time.perf_counter() - t0
    print(json.dumps({
        "use_numba": os.environ.get("PIM_NUMBA", "1") != "0",
        "encode_ms_per_call": 1000.0 * elapsed / reps,
        "digest": float(np.sum(p)),
        "first_vals": [float(x) for x in p[:4]],
    }))


def main():
    results = []
    for flag in ("1", "0"):
        env = dict(os.environ, PIM_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--worker"],
                             env=env, capture_output=True, text=True)
        if out.returncode != 0:
            sys.stderr.write(out.stderr)
            return 1
        results.append(json.loads(out.stdout.strip().splitlines()[-1]))
    jit, py = results
    print(f"numba  : {jit['encode_ms_per_call']:.4f} ms/encode")
    print(f"python : {py['encode_ms_per_call']:.4f} ms/encode")
    print(f"speedup: {py['encode_ms_per_call'] / jit['encode_ms_per_call']:.1f}x")
    diff = max(abs(a - b) for a, b in zip(jit["first_vals"], py["first_vals"]))
    diff = max(diff, abs(jit["digest"] - py["digest"]))
    print(f"max output difference: {diff:.3g}")
    return 0 if diff < 1e-12 else 1


if __name__ == "__main__":
    if "--worker" in sys.argv:
        _worker()
    else:
        sys.exit(main())
