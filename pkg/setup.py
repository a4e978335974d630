"""Build script for the compiled SMO core.

The extension is optional: if the build is skipped or fails, the package
falls back to the pure-Python solver in emg_affect._smo.smo_py.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "emg_affect._smo._smo_cy",
        ["src/emg_affect/_smo/_smo_cy.pyx"],
        # Contraction off keeps the compiled arithmetic IEEE-identical to
        # the pure-Python fallback (no fused multiply-add).
        extra_compile_args=["-O2", "-ffp-contract=off"],
    ),
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    ),
)
