import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# the package falls back to numpy kernels when the extension is missing
extensions = []
if cythonize is not None and not os.environ.get("CRFDSPAM_NO_EXT"):
    extensions = cythonize(
        [
            Extension(
                "crfdspam._ckernels",
                ["src/crfdspam/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
