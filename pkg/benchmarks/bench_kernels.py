"""Time each hot kernel under numba and under the pure-numpy fallback.

Run with ``python benchmarks/bench_kernels.py [--repeat N] [--size N]``.
The first numba call is a warm-up so compile time is excluded.
"""
import argparse
import timeit

import numpy as np

from rittlab import _kernels as K


def _cases(n: int, rng: np.random.Generator) -> dict:
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A /= 2 * np.linalg.norm(A, 2)
    U = np.triu(A)
    nodes = 1.5 * np.exp(2j * np.pi * np.arange(512) / 512)
    coeffs = rng.standard_normal(512) + 0j
    V = np.triu(rng.standard_normal((n // 2, n // 2))) + 3 * np.eye(n // 2)
    C = rng.standard_normal((n, n // 2)) + 0j
    Phi = rng.standard_normal((400, 400)) + 1j * rng.standard_normal((400, 400))
    L = rng.standard_normal((2000, 400)) + 0j
    R = rng.standard_normal((2000, 400)) + 0j
    coords = rng.standard_normal((14, 6)) + 0j
    return {
        "hessenberg": (A,),
        "hqr_eigvals": (K.hessenberg_np(A), 60),
        "tri_inverse_stack": (U, nodes[:128]),
        "tri_resolvent_sum": (U, nodes, coeffs),
        "tri_sylvester": (U, V, C),
        "cauchy_double": (Phi, L, R),
        "rademacher_moment": (coords, 3.0),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.NUMBA_KERNELS:
        raise SystemExit("numba is not installed; nothing to compare")

    cases = _cases(args.size, np.random.default_rng(args.seed))
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, inputs in cases.items():
        inputs = tuple(np.ascontiguousarray(x) if isinstance(x, np.ndarray) else x
                       for x in inputs)
        fast, slow = K.NUMBA_KERNELS[name], K.NUMPY_KERNELS[name]
        fast(*inputs)
        t_np = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
