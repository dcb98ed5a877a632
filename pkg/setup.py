import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: install pure-Python kernels only
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension(
            "gatemonlab._kernels._core",
            ["src/gatemonlab/_kernels/_core.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
            optional=True,
        )],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
