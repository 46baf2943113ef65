from setuptools import Extension, setup

ext_modules = [
    Extension(
        "pmtomo._scan",
        sources=["src/pmtomo/_scan.pyx"],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
    )
]

if __name__ == "__main__":
    from Cython.Build import cythonize
    import numpy as np

    setup(
        ext_modules=cythonize(ext_modules, language_level="3"),
        include_dirs=[np.get_include()],
    )
