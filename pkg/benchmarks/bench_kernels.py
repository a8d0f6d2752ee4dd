"""Compare the numba kernels with their pure-numpy / pure-Python fallbacks.

    python benchmarks/bench_kernels.py [--radius 96] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hexlimit import _kernels as kern
from hexlimit.acceptance import RANDOM_DEPTH, random_generic_q
from hexlimit.lattice import hex_ball_array
from hexlimit.marking import geometric_marks
from hexlimit.triangulation import TriContext, bulk_d


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--radius", type=int, default=96)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not kern._HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    import numba

    ctx = TriContext(random_generic_q(0), RANDOM_DEPTH)
    pts = hex_ball_array(args.radius)
    d1, d2 = bulk_d(ctx, pts)
    t1, t2, t3 = d2, -d1, d1 - d2

    val_jit = numba.njit(cache=True)(kern._val2_capped_loop)
    formula_jit = numba.njit(cache=True)(kern._formula_loop)
    uf_jit = numba.njit(cache=True)(kern._uf_solve_loop)

    # union-find input: the R2 constraint system of a real patch
    captured = {}
    original = kern._uf_impl

    def capture(n, a, b, rel):
        captured["args"] = (n, a.copy(), b.copy(), rel.copy())
        return original(n, a, b, rel)

    kern._uf_impl = capture
    geometric_marks(ctx, pts)
    kern._uf_impl = original
    n, a, b, rel = captured["args"]

    cap = np.int64(ctx.K)
    cases = [
        ("val2_capped", lambda: kern._val2_capped_numpy(d1, ctx.K), lambda: val_jit(d1, cap)),
        ("parity_formula", lambda: kern._formula_numpy(t1, t2, t3, ctx.K), lambda: formula_jit(t1, t2, t3, cap)),
        ("uf_solve", lambda: kern._uf_solve_loop(n, a, b, rel), lambda: uf_jit(n, a, b, rel)),
    ]
    print(f"radius={args.radius} tiles={len(pts)} constraints={len(a)}")
    print(f"{'kernel':<16}{'fallback s':>12}{'numba s':>12}{'speedup':>10}")
    for name, slow, fast in cases:
        fast()  # compile outside the timing
        ref, got = slow(), fast()
        ref = ref if isinstance(ref, tuple) else (ref,)
        got = got if isinstance(got, tuple) else (got,)
        assert all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(ref, got)), name
        ts, tf = best_of(slow, args.repeat), best_of(fast, args.repeat)
        print(f"{name:<16}{ts:>12.4f}{tf:>12.4f}{ts / tf:>10.1f}x")


if __name__ == "__main__":
    main()
