from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the pure-Python fallback is used at import
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("fel._el_core", ["src/fel/_el_core.pyx"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
