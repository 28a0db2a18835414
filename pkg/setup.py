"""Build script: compiles the optional Cython kernel core.

The compiled extension is a performance twin of safelevel.probkit._pykernels;
if Cython or a C compiler is unavailable the build degrades to the pure-Python
kernels and the package stays fully functional.
"""
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext
from setuptools.extension import Extension


class optional_build_ext(build_ext):
    """Skip the extension (with a warning) instead of failing the install."""

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
        print(
            f"WARNING: building the compiled kernel core failed ({exc}); "
            "falling back to the pure-Python kernels.",
            file=sys.stderr,
        )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: {exc}; compiled kernel core not built.", file=sys.stderr)
        return []
    ext = Extension(
        "safelevel.probkit._ckernels",
        sources=["src/safelevel/probkit/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off: the compiled kernels must be bit-identical to the
        # pure-Python ones, so FMA contraction has to stay disabled.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
