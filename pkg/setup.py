"""Build the optional compiled Langevin kernel.

The package works without it; ``clborel.langevin`` falls back to numpy.
Set CLBOREL_NO_EXT=1 to skip the extension entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.getenv("CLBOREL_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "clborel._kernel",
                    ["src/clborel/_kernel.pyx"],
                    depends=["src/clborel/_langevin_core.h"],
                    include_dirs=[numpy.get_include(), "src/clborel"],
                    libraries=["m"],
                    # no FMA contraction: keeps results identical to the numpy path
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
