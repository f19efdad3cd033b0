"""Build the optional Cython kernels.

    pip install -e . --no-build-isolation

The package still imports without the extension; it falls back to
``inexact_dr._kernels_py``.
"""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "inexact_dr._kernels",
                ["src/inexact_dr/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
