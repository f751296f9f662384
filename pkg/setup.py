"""Build script for the optional compiled flood kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed build must not abort installation.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    # contract=off keeps IEEE expression semantics (no FMA fusion) so the
    # compiled kernel stays bit-identical to the NumPy fallback
    ext = Extension(
        "bgiopt.flood._kernel",
        ["src/bgiopt/flood/_kernel.pyx"],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext.optional = True
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
