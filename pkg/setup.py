"""Build script: compiles the optional Cython traffic-stepping kernel.

The package works without the extension (a pure-numpy fallback is selected
at import time), so any compiler or Cython failure downgrades to a warning
instead of breaking the install.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        sys.stderr.write(
            "WARNING: cellpower C extension failed to build (%s); "
            "falling back to the pure-Python engine.\n" % exc
        )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        sys.stderr.write("WARNING: %s; building without C extension.\n" % exc)
        return []
    from setuptools import Extension

    ext = Extension(
        "cellpower._engine_cy",
        ["src/cellpower/_engine_cy.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
