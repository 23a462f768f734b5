import sys

from setuptools import setup

# The compiled kernel is optional: the package falls back to the pure-Python
# twin when the extension is unavailable (see clearmesh.core).
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/clearmesh/_core.pyx"],
        language_level=3,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    sys.stderr.write(f"warning: building without compiled kernel ({exc})\n")

setup(ext_modules=ext_modules)
