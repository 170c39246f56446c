"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a vectorized numpy
fallback is selected at import time), so a failed compile only costs speed.
"""

from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
    import numpy

    extensions = cythonize(
        [
            Extension(
                "cufsr.kernels._fast",
                sources=["src/cufsr/kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
