"""Build script; compiles the optional MAC scheduling extension when Cython is present.

The package is fully functional without the extension: the engine falls back
to the pure-Python kernel at import time. Set WIMAXSIM_NO_EXT=1 to skip the
compile step entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("WIMAXSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "wimaxsim._mac_core",
                    ["src/wimaxsim/_mac_core.pyx"],
                    optional=True,
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install as pure Python.
        ext_modules = []

setup(ext_modules=ext_modules)
