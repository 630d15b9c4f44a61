"""Compare the compiled and pure-Python graph kernels on one random lift.

    python3 benchmarks/bench_kernels.py --n 300 --repeat 3
"""
import argparse
import time

import numpy as np

from naelab.kernels import backend_module
from naelab.lifts import random_instance


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=int, default=3)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--gmax", type=int, default=6)
    ap.add_argument("--radius", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    g, _ = random_instance(a.c, a.d, a.n, a.seed)
    indptr, nbr, eid = g.csr
    centers = np.arange(g.vertex_count, dtype=np.int64)
    cases = {
        "count_cycles": lambda m: m.count_cycles(indptr, nbr, eid, a.gmax, 10**12),
        "ball_excess": lambda m: m.ball_excess(indptr, nbr, eid, g.edge_count, centers,
                                               a.radius, 1, 10**9),
        "signed_ball": lambda m: m.signed_ball(indptr, nbr, eid, g.signs, 0, 2 * a.radius, 10**9),
    }
    try:
        fast = backend_module("cython")
    except ImportError:
        fast = None
    slow = backend_module("python")
    print(f"graph: {g.vertex_count} vertices, {g.edge_count} edges")
    print(f"{'kernel':<14}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}  same")
    for name, call in cases.items():
        t_py, out_py = _best(lambda: call(slow), a.repeat)
        if fast is None:
            print(f"{name:<14}{t_py:>12.4f}{'n/a':>12}{'':>10}")
            continue
        t_c, out_c = _best(lambda: call(fast), a.repeat)
        same = all(np.array_equal(np.asarray(u), np.asarray(v)) for u, v in
                   zip(out_py if isinstance(out_py, tuple) else (out_py,),
                       out_c if isinstance(out_c, tuple) else (out_c,)))
        print(f"{name:<14}{t_py:>12.4f}{t_c:>12.4f}{t_py / t_c:>10.1f}  {same}")


if __name__ == "__main__":
    main()
