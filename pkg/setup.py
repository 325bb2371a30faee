"""Build script: compiles the optional tridiagonal/SOR speedup extension.

The package is fully functional without the extension; monoflow._kernels
falls back to the pure-Python implementation when the import fails.
"""

import numpy as np
from setuptools import setup, Extension
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the C extension if possible, otherwise install pure-Python only."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or toolchain missing
            print(f"monoflow: skipping compiled kernels ({exc!r}); "
                  "pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"monoflow: failed to build {ext.name} ({exc!r}); "
                  "pure-Python fallback will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "monoflow._kernels._speedups",
        ["src/monoflow/_kernels/_speedups.pyx"],
        include_dirs=[np.get_include()],
        # -ffp-contract=off keeps the compiled arithmetic bit-identical to
        # the pure-Python kernels (no FMA contraction).
        extra_compile_args=["-O2", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
