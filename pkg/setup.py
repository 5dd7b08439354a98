"""Build script: compiles the optional Cython kernel extension.

If Cython or a C compiler is unavailable the package still installs; the
runtime falls back to the pure numpy kernels.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        "src/elvis/_kernels/_ckernels.pyx",
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
except ImportError:
    pass

setup(ext_modules=ext_modules)
