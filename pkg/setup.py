import numpy
from Cython.Build import cythonize
from setuptools import Extension, setup

setup(
    ext_modules=cythonize(
        [Extension("sepconvex._core", ["src/sepconvex/_core.pyx"], include_dirs=[numpy.get_include()])],
        language_level=3,
    )
)
