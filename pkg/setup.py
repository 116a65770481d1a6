import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the compiled kernels if possible; fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"localcap: compiled kernels unavailable ({exc}); "
                  "falling back to NumPy kernels", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"localcap: failed to build {ext.name} ({exc}); "
                  "falling back to NumPy kernels", file=sys.stderr)


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"localcap: {exc}; skipping compiled kernels", file=sys.stderr)
        return []
    ext = Extension(
        "localcap._core",
        ["src/localcap/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
