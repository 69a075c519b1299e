"""Times each hot kernel's numba path against its pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py
The numpy column is what you get with LONGSCRIBE_NO_NUMBA=1.
"""

import time

import numpy as np

from longscribe import _kernels as K

rng = np.random.default_rng(0)


def clock(fn, *args, repeat=5):
    fn(*args)  # warm-up / compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def row(name, jit_fn, np_fn, *args):
    t_np = clock(np_fn, *args)
    if jit_fn is not None:
        t_jit = clock(jit_fn, *args)
        ratio = t_np / t_jit if t_jit > 0 else float("inf")
        print(f"{name:<28} numba {t_jit * 1e3:9.2f} ms   numpy {t_np * 1e3:9.2f} ms   x{ratio:.1f}")
    else:
        print(f"{name:<28} numba   (unavailable)   numpy {t_np * 1e3:9.2f} ms")


def main():
    print(f"numba kernels active: {K.HAVE_NUMBA}\n")

    a = rng.integers(0, 50, 3000).astype(np.int64)
    b = rng.integers(0, 50, 3000).astype(np.int64)
    row("levenshtein_distance 3k x 3k", K._lev_distance_jit, K._lev_distance_np, a, b)

    a2 = rng.integers(0, 50, 1200).astype(np.int64)
    b2 = rng.integers(0, 50, 1200).astype(np.int64)
    row("levenshtein_ops 1.2k x 1.2k", K._lev_backtrack_jit, K._lev_backtrack_np, a2, b2)

    c = rng.integers(0, 30, 2000).astype(np.int64)
    d = rng.integers(0, 30, 2000).astype(np.int64)
    row("lcs_length 2k x 2k", K._lcs_length_jit, K._lcs_length_np, c, d)

    probs = rng.uniform(0, 1, 2_000_000)
    row("hysteresis 2M frames", K._hysteresis_jit, K._hysteresis_np, probs, 0.6, 0.4)

    x = rng.uniform(-0.9, 0.9, 16000 * 60)
    h = rng.uniform(-0.1, 0.3, 161)
    out_len = -(-len(x) * 4 // 3)
    row(
        "polyphase 60s up4/down3",
        K._polyphase_jit,
        K._polyphase_np,
        x,
        h,
        4,
        3,
        out_len,
        80,
    )


if __name__ == "__main__":
    main()
