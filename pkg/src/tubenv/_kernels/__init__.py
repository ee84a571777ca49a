"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time from ``TUBENV_KERNELS``:
``numba`` (require numba), ``numpy`` (force the fallback) or ``auto``
(default: numba if importable). Both implementations stay importable
through :func:`implementation` for cross-checks and benchmarks.
"""
import importlib
import os

import numpy as np

_REQUESTED = os.environ.get("TUBENV_KERNELS", "auto").strip().lower()
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise ImportError(f"TUBENV_KERNELS must be auto, numba or numpy, got {_REQUESTED!r}")


def implementation(name):
    """Return the kernel module ``'numba'`` or ``'numpy'``."""
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(f"{__name__}.{name}_impl")


if _REQUESTED == "numpy":
    _impl = implementation("numpy")
else:
    try:
        _impl = implementation("numba")
    except ImportError:
        if _REQUESTED == "numba":
            raise
        _impl = implementation("numpy")

BACKEND = _impl.__name__.rsplit(".", 1)[-1].replace("_impl", "")


class KernelConvergenceError(RuntimeError):
    pass


def poly_eval(exps, coeffs, pts, impl=None):
    """Evaluate ``sum_t coeffs[t] * prod_j pts[:, j] ** exps[t, j]`` for each row of ``pts``."""
    impl = impl or _impl
    dtype = np.result_type(coeffs, pts, np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=dtype)
    pts = np.ascontiguousarray(pts, dtype=dtype)
    if exps.ndim != 2 or pts.ndim != 2 or (exps.shape[0] and exps.shape[1] != pts.shape[1]):
        raise ValueError("poly_eval shape mismatch")
    if exps.shape[0] == 0:
        return np.zeros(pts.shape[0], dtype=dtype)
    return impl.poly_eval(exps, coeffs, pts)


def jacobi_eigenvalues(mats, tol=1e-12, max_sweeps=100, impl=None):
    """Ascending eigenvalues of each symmetric matrix in a ``(b, n, n)`` stack."""
    impl = impl or _impl
    mats = np.ascontiguousarray(mats, dtype=np.float64)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ValueError("expected a (b, n, n) stack")
    vals, ok = impl.jacobi_eigenvalues(mats, tol, max_sweeps)
    if not ok:
        raise KernelConvergenceError("cyclic Jacobi did not converge within the sweep cap")
    return np.sort(vals, axis=1)
