"""Build script for the optional compiled LSTM kernels.

The package works without the extension (a pure numpy implementation is
selected at import time), so any failure here downgrades to a warning
instead of aborting the install.
"""

import sys

from setuptools import setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"kinescore: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    from setuptools import Extension

    ext = Extension(
        "kinescore._kernels",
        sources=["src/kinescore/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
