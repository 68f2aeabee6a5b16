import os
import sys

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SABOA_NO_EXTENSION", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        compile_args, libraries = ["-O3"], []
        if sys.platform.startswith("linux"):
            # lets gcc call the glibc vector exp (libmvec) from the weight loop
            compile_args.append("-ffast-math")
            libraries = ["mvec", "m"]
        ext_modules = cythonize(
            [
                Extension(
                    "saboa._kernels",
                    ["src/saboa/_kernels.pyx"],
                    extra_compile_args=compile_args,
                    libraries=libraries,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
