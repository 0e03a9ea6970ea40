"""Build script: compiles the stepping-core extension when a toolchain is
available, and degrades to the pure-Python fallback otherwise.

Force-skip the extension with DELAYQUANT_NO_EXT=1.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Swallow compiler failures; the package works without the extension."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: extension build skipped ({exc}); "
                  "falling back to the pure-Python core")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python core")


if os.environ.get("DELAYQUANT_NO_EXT"):
    ext_modules = []
    cmdclass = {}
else:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension(
            "delayquant._fastcore",
            ["src/delayquant/_fastcore.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
    cmdclass = {"build_ext": optional_build_ext}

setup(ext_modules=ext_modules, cmdclass=cmdclass)
