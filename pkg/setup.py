"""Build script for the optional compiled gate kernels.

The package works without the extension (a NumPy fallback is selected at
import time), so a missing C toolchain or Cython only costs speed.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hqml.qsim._gatekernels",
                ["src/hqml/qsim/_gatekernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
