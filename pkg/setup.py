"""Build script for the optional compiled kernel core.

The package is pure Python except for ``gpbo._core._fast``, a Cython
extension that accelerates covariance-matrix and gradient assembly. The
extension is marked optional: if it cannot be built the package installs
anyway and falls back to the NumPy implementation at import time.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "gpbo._core._fast",
        ["src/gpbo/_core/_fast.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext.optional = True
    extensions = cythonize(ext, language_level=3)

setup(ext_modules=extensions)
