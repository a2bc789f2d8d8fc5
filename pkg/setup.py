import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DQLAP_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "dqlap._kernels",
                ["src/dqlap/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )],
            language_level=3,
        )

setup(ext_modules=ext_modules)
