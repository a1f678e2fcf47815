import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled core is optional at runtime (a NumPy fallback is selected at
# import time), but we always try to build it here.
compile_args = ["-O3", "-fopenmp"]
if os.environ.get("DRIVENDIMER_NATIVE"):
    compile_args.insert(1, "-march=native")

extensions = [
    Extension(
        "drivendimer._core",
        ["src/drivendimer/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    ),
)
