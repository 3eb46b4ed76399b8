import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: the conv kernel contract pins the exact rounding sequence
# (one rounded multiply + one rounded add per term); fused multiply-add would
# break bit-equality with the pure-python backend and the test oracles.
extensions = [
    Extension(
        "relclass.kernels._convext",
        ["src/relclass/kernels/_convext.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": 3}))
