"""Kernel selection: the Cython extension when built, NumPy otherwise.

Set ``MEASCONV_PURE_PYTHON=1`` to force the fallback.
"""

import os

from measconv import _pykernels

if os.environ.get("MEASCONV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from measconv import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
        BACKEND = "python"

uniforms = _impl.uniforms
table_convolve_float = _impl.table_convolve_float
stream_key = _impl.stream_key
