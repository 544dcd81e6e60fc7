"""Build hook for the optional compiled kernel backend.

The extension is marked optional: if Cython or a C compiler is missing the
install still succeeds and ma_lab falls back to the numpy kernel backend.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ma_lab._kernels",
                ["src/ma_lab/_kernels.pyx"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
