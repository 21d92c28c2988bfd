"""Build script: compiles the optional Cython stepping kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs speed.
"""

import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover - build-time guard
    cythonize = None

extensions = []
if cythonize is not None and os.path.exists("src/wellexit/_kernels.pyx"):
    extensions = cythonize(
        [
            Extension(
                "wellexit._kernels",
                ["src/wellexit/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # -ffp-contract=off keeps the C arithmetic bit-identical to the
                # NumPy fallback (no fused multiply-add surprises).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
