"""Build script for the optional compiled stencil core.

The package is fully functional without the extension (a numpy fallback is
selected at import time); the extension just makes the fd2 hot loops faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "micromorph._kernels._fdstencil",
                sources=["src/micromorph/_kernels/_fdstencil.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
