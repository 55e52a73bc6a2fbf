"""Build script for the optional Cython kernel extension.

The package works without the extension (redsum.kernels falls back to the
pure-Python twin), so the build is marked optional and never fails the
install.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        [
            Extension(
                "redsum._ckernels",
                ["src/redsum/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )
    for ext in ext_modules:
        ext.optional = True
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
