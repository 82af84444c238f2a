import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# no -ffast-math: it breaks the compensated summation in the kernels
extensions = [
    Extension(
        "gbslab._core",
        ["src/gbslab/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
