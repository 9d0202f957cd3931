import sys

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# plain complex arithmetic is enough here; values never hit inf/nan
COMPILE_ARGS = [] if sys.platform == "win32" else ["-O3", "-fcx-limited-range"]

extensions = [
    Extension(
        "cascade_laser._kernels",
        ["src/cascade_laser/_kernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=COMPILE_ARGS,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}),
)
