"""Build script.

The compiled kernels are optional: when Cython or a C toolchain is not
available the package installs without them and falls back to the pure
Python implementations in ``bellmeter._kernels.fallback``.
Set ``BELLMETER_NO_EXTENSION=1`` to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("BELLMETER_NO_EXTENSION") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "bellmeter._kernels._core",
        ["src/bellmeter/_kernels/_core.pyx"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
