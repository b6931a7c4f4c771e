"""Build script: compiles the optional accelerator extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failed compile should not block installation:
run with RASCH_ASSESS_SKIP_EXT=1 to install pure-Python only.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RASCH_ASSESS_SKIP_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rasch_assess._core",
                ["src/rasch_assess/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
