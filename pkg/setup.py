import os

import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# numpy's C distribution functions (random_standard_normal etc.) live in a
# static library shipped next to numpy.random
npyrandom_dir = os.path.join(os.path.dirname(numpy.random.__file__), "lib")

extensions = [
    Extension(
        "mibridge._kernels._core",
        sources=["src/mibridge/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        library_dirs=[npyrandom_dir],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
