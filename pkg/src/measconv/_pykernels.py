"""NumPy fallback for the hot kernels.

Must stay bit-identical to ``_ckernels.pyx``; the test-suite compares the
two whenever the extension is importable.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
STEP = np.uint64(0xD1B54A32D192ED03)
_M64 = (1 << 64) - 1


def _splitmix(z):
    z = z + GOLDEN
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    return z ^ (z >> np.uint64(31))


def stream_key(seed, stream):
    """64-bit key for the ``(seed, stream)`` pair."""
    with np.errstate(over="ignore"):
        s = np.array([seed & _M64], dtype=np.uint64)
        t = np.array([stream & _M64], dtype=np.uint64)
        return int(_splitmix(_splitmix(s) ^ (t * STEP))[0])


def uniforms(seed, stream, start, n):
    """Uniform doubles in [0, 1) for counters ``start .. start+n-1``."""
    key = np.uint64(stream_key(seed, stream))
    with np.errstate(over="ignore"):
        idx = np.arange(start, start + n, dtype=np.uint64)
        z = _splitmix(key + idx * STEP)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def table_convolve_float(action, mu, nu):
    """Float push-forward of ``mu x nu`` through an integer action table.

    Accumulation runs over ``(g, x)`` in row-major order.
    """
    action = np.asarray(action, dtype=np.intp)
    out = np.zeros(len(nu), dtype=np.float64)
    w = np.multiply.outer(np.asarray(mu, dtype=np.float64), np.asarray(nu, dtype=np.float64))
    np.add.at(out, action.ravel(), w.ravel())
    return out
