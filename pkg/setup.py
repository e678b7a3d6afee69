"""Build script for the optional compiled recursion kernel.

The package is fully functional without the extension (a pure-Python
mirror of the kernel is selected at import time), so a missing compiler
or Cython only costs speed.

Bit-reproducibility note: the kernel and its Python mirror must produce
identical floating point streams, so FMA contraction and fast-math are
disabled explicitly.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "mannlab._core._mann",
                ["src/mannlab/_core/_mann.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
