import sys

from setuptools import setup

# The emission hot path has an optional Cython build; the package falls back
# to the pure-Python kernel when the extension is absent or fails to build.
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/copatch/_kernel.pyx"],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"copatch: building without compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
