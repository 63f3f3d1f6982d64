import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the numpy backend is used
    cythonize = None


def _openmp_flags():
    if sys.platform == "win32":
        return ["/openmp"], []
    if os.environ.get("SPLASHSIM_NO_OPENMP"):
        return [], []
    return ["-fopenmp"], ["-fopenmp"]


compile_omp, link_omp = _openmp_flags()

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "splashsim._kernels",
                ["src/splashsim/_kernels.pyx"],
                include_dirs=[np.get_include()],
                # no fma contraction: results must match the numpy/reference paths bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"] + compile_omp,
                extra_link_args=link_omp,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
