import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DECENT_PURE_PYTHON"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("decent.dht._kernels", ["src/decent/dht/_kernels.pyx"], extra_compile_args=["-O3"])],
            language_level=3,
        )

setup(ext_modules=ext_modules)
