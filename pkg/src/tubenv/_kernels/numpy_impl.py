"""Pure-numpy versions of the hot kernels.

Operation order mirrors :mod:`numba_impl` (power tables built by repeated
multiplication, terms accumulated in storage order) so the two paths agree
to rounding.
"""
import numpy as np


def poly_eval(exps, coeffs, pts):
    m, n = pts.shape
    out = np.zeros(m, dtype=coeffs.dtype)
    nterms = exps.shape[0]
    if nterms == 0 or m == 0:
        return out
    maxdeg = int(exps.max())
    pw = np.empty((maxdeg + 1, m, n), dtype=pts.dtype)
    pw[0] = 1.0
    for d in range(1, maxdeg + 1):
        pw[d] = pw[d - 1] * pts
    for t in range(nterms):
        term = np.full(m, coeffs[t], dtype=coeffs.dtype)
        for j in range(n):
            e = exps[t, j]
            if e:
                term = term * pw[e, :, j]
        out += term
    return out


def jacobi_eigenvalues(mats, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi on a stack of symmetric matrices, vectorised over the stack.

    Returns ``(eigenvalues, converged)``; eigenvalues are unsorted diagonals.
    """
    a = np.array(mats, dtype=np.float64, copy=True)
    b, n, _ = a.shape
    if b == 0 or n == 0:
        return np.zeros((b, n)), True
    scale = np.sqrt(np.einsum("bij,bij->b", a, a))
    thresh = tol * scale
    offmask = ~np.eye(n, dtype=bool)
    rows = np.arange(b)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[:, offmask] ** 2, axis=1))
        if np.all(off <= thresh):
            return np.diagonal(a, axis1=1, axis2=2).copy(), True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                active = np.abs(apq) > 1e-300
                if not np.any(active):
                    continue
                safe = np.where(active, apq, 1.0)
                theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
                big = np.abs(theta) > 1e150
                sgn = np.where(theta >= 0.0, 1.0, -1.0)
                with np.errstate(over="ignore"):
                    t = np.where(
                        big,
                        0.5 / np.where(big, theta, 1.0),
                        sgn / (np.abs(theta) + np.sqrt(np.where(big, 0.0, theta) ** 2 + 1.0)),
                    )
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                akp = a[:, :, p].copy()
                akq = a[:, :, q].copy()
                a[:, :, p] = c[:, None] * akp - s[:, None] * akq
                a[:, :, q] = s[:, None] * akp + c[:, None] * akq
                apk = a[:, p, :].copy()
                aqk = a[:, q, :].copy()
                a[:, p, :] = c[:, None] * apk - s[:, None] * aqk
                a[:, q, :] = s[:, None] * apk + c[:, None] * aqk
                a[rows[active], p, q] = 0.0
                a[rows[active], q, p] = 0.0
    off = np.sqrt(np.sum(a[:, offmask] ** 2, axis=1))
    return np.diagonal(a, axis1=1, axis2=2).copy(), bool(np.all(off <= thresh))
