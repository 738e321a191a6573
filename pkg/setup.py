"""Build script: compiles the optional matching kernel when Cython is available.

The package is fully functional without the extension; snrg._kernels falls
back to the pure-Python kernel at import time.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise install pure-Python only."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping compiled kernel ({exc}); "
                  f"using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to compile {ext.name} ({exc}); "
                  f"using pure-Python fallback")


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/snrg/_kernels/_cmatch.pyx"],
        compiler_directives={"language_level": 3},
    )
except ImportError:
    print("warning: Cython not installed; building without compiled kernel")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
