"""Build script for the optional compiled recursion kernels.

The package works without the extension (a numpy/scipy fallback is selected
at import time); building it makes window scans roughly an order of
magnitude faster.
"""
import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = [
    Extension(
        "garchsup._kernels._core",
        ["src/garchsup/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

if cythonize is not None:
    ext_modules = cythonize(extensions, compiler_directives={"language_level": "3"})
else:  # pure-python install; the fallback backend is used
    ext_modules = []

setup(ext_modules=ext_modules)
