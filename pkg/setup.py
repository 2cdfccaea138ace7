import os

import numpy as np
from setuptools import Extension, setup

# FP contraction (fused multiply-add) and sin/cos -> sincos fusion would make
# the compiled kernels differ from the pure-Python ones in the last bits.
compile_args = ["-O2", "-ffp-contract=off", "-fno-fast-math", "-fno-builtin-sin", "-fno-builtin-cos"]

ext_modules = []
if os.environ.get("CLBENCH_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "clbench._core",
            ["src/clbench/_core.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=compile_args,
        )],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
