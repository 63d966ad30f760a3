"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure-numpy fallback is selected
at import time), so any failure here is non-fatal for development installs:
delete the Extension list or install with JNCC_SKIP_EXT=1 to skip.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("JNCC_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "jncc.kernels._fast",
                    ["src/jncc/kernels/_fast.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
