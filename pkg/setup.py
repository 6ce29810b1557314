"""Build hook for the optional compiled pulse-integrator kernel.

The package is pure Python plus one Cython extension for the hot loop
(the 13-state master-equation integrator).  If Cython or a C compiler is
missing the extension is skipped and the numpy fallback in
``toptrap._kernels`` is used instead.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "toptrap._kernels._bloch_cy",
                ["src/toptrap/_kernels/_bloch_cy.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
