from setuptools import Extension, setup

# The compiled extension is optional: if Cython (or a C compiler) is not
# available the package falls back to the pure-Python kernels at import time.
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "greenfarm._speedups",
                ["src/greenfarm/_speedups.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
