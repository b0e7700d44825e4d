"""Builds the optional compiled kernel core.

The package works without it: didan.kernels falls back to the numpy
implementations when the extension is missing or DIDAN_PURE_PYTHON=1.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "didan.kernels._core",
        sources=["src/didan/kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
