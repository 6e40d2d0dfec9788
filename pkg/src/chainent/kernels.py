"""Backend selection for the hot RK4 kernels.

The compiled extension is used when it has been built; otherwise the numpy
fallback is imported. Set ``CHAINENT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
rk4_modes = _kernels_py.rk4_modes
rk4_adjoint = _kernels_py.rk4_adjoint

if not os.environ.get("CHAINENT_PURE_PYTHON"):
    try:
        from . import _kernels as _ext
    except ImportError:  # extension not built
        pass
    else:
        rk4_modes = _ext.rk4_modes
        rk4_adjoint = _ext.rk4_adjoint
        BACKEND = "cython"

__all__ = ["BACKEND", "rk4_adjoint", "rk4_modes"]
