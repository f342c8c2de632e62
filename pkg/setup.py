"""Build script: compiles the kernel extension when Cython and a C
compiler are available, otherwise installs pure-Python only (the package
falls back to the NumPy kernels at import time)."""
import sys

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "rsflow._kernels._core",
        sources=["src/rsflow/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except Exception as exc:  # pragma: no cover
    print(f"rsflow: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
