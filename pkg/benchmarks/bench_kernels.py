"""Compare the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best wall time of each backend and
checks that both return bit-identical arrays.
"""

import argparse
import timeit

import numpy as np

from measconv import _pykernels

try:
    from measconv import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    yield "uniforms n=10^6", lambda k: k.uniforms(42, 7, 0, 1_000_000)
    yield "uniforms n=10^3", lambda k: k.uniforms(42, 7, 0, 1_000)
    for n in (8, 64, 256):
        table = np.array([[(x + g) % n for x in range(n)] for g in range(n)], dtype=np.intp)
        mu = rng.dirichlet(np.ones(n)).tolist()
        nu = rng.dirichlet(np.ones(n)).tolist()
        yield f"table convolve {n}x{n}", lambda k, t=table, a=mu, b=nu: k.table_convolve_float(t, a, b)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'kernel':<24}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}  identical")
    for name, fn in cases():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:<24}{t_py:>14.3f}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        same = np.asarray(fn(_pykernels)).tobytes() == np.asarray(fn(_ckernels)).tobytes()
        print(f"{name:<24}{t_py:>14.3f}{t_c:>14.3f}{t_py / t_c:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
