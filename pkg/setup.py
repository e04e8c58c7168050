from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "daggercharge._core_cy",
                ["src/daggercharge/_core_cy.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython: the package falls back to the pure-Python kernel at import.
    ext_modules = []

setup(ext_modules=ext_modules)
