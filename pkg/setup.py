"""Build script for the optional compiled kernel extension.

The package works without the extension (a pure numpy backend is selected at
import time), so any failure to build it should not block installation.
Set MPCPROF_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("MPCPROF_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "mpcprof._kernels._fast",
        ["src/mpcprof/_kernels/_fast.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
