"""Build script for the optional compiled kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile downgrades to a warning instead of
aborting the install.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernels skipped ({exc}); "
                  "pure-Python backend will be used", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); "
                  "pure-Python backend will be used", file=sys.stderr)


def make_extensions():
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "lentparticle._kernels_cy",
        ["src/lentparticle/_kernels_cy.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


try:
    extensions = make_extensions()
except Exception as exc:  # noqa: BLE001
    print(f"warning: cython unavailable ({exc}); building without kernels",
          file=sys.stderr)
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
