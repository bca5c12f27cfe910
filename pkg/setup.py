"""Build script: compiles the optional Cython evaluation kernel.

The package is fully functional without the extension (a pure-numpy
fallback is selected at import time); any failure here downgrades to a
pure-Python build instead of aborting the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "nilflow._kernel._fastkern",
                ["src/nilflow/_kernel/_fastkern.pyx"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"nilflow: building without compiled kernel ({exc!r})")
    ext_modules = []

setup(ext_modules=ext_modules)
