import os

from setuptools import Extension, setup

# The compiled kernels are an optional speedup: the package falls back to
# pure-Python implementations when the extension is absent (see
# shapinf._kernels). Set SHAPINF_NO_EXT=1 to skip the build entirely.
ext_modules = []
if os.environ.get("SHAPINF_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "shapinf._kernels._speedups",
                    ["src/shapinf/_kernels/_speedups.pyx"],
                    # -ffp-contract=off keeps float results identical to the
                    # pure-Python fallback (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
