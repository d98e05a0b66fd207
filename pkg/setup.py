"""Builds the optional Cython kernels (trace simulation, conv block).

Without Cython or a C compiler the package installs pure Python and
`linkprint.kernels` falls back to the pure-Python modules.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    pass
else:
    ext_modules = cythonize(
        [Extension("linkprint._trace_c", ["src/linkprint/_trace_c.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                   extra_compile_args=["-O2", "-ffp-contract=off"]),
         Extension("linkprint._conv_c", ["src/linkprint/_conv_c.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                   extra_compile_args=["-O3", "-ffp-contract=off"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
