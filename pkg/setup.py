import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MEASCONV_NO_EXT", "") in ("", "0"):
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "measconv._ckernels",
                    ["src/measconv/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    # keep a*b+c unfused so results match the NumPy fallback bit for bit
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
