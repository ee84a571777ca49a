"""numba-compiled versions of the hot kernels (same algorithms as numpy_impl)."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def poly_eval(exps, coeffs, pts):
    m, n = pts.shape
    nterms = exps.shape[0]
    out = np.zeros(m, dtype=coeffs.dtype)
    if nterms == 0 or m == 0:
        return out
    maxdeg = 0
    for t in range(nterms):
        for j in range(n):
            if exps[t, j] > maxdeg:
                maxdeg = exps[t, j]
    pw = np.empty((maxdeg + 1, n), dtype=pts.dtype)
    for i in range(m):
        for j in range(n):
            pw[0, j] = 1.0
            for d in range(1, maxdeg + 1):
                pw[d, j] = pw[d - 1, j] * pts[i, j]
        for t in range(nterms):
            term = coeffs[t]
            for j in range(n):
                e = exps[t, j]
                if e:
                    term = term * pw[e, j]
            out[i] += term
    return out


@njit(cache=True)
def _jacobi_one(a, tol, max_sweeps):
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    thresh = tol * math.sqrt(scale)
    for _ in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j] * a[i, j]
        if math.sqrt(off) <= thresh:
            return True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    sgn = 1.0 if theta >= 0.0 else -1.0
                    t = sgn / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
    return False


@njit(cache=True)
def jacobi_eigenvalues(mats, tol=1e-12, max_sweeps=100):
    b, n, _ = mats.shape
    out = np.empty((b, n))
    ok = True
    work = np.empty((n, n))
    for i in range(b):
        for r in range(n):
            for c in range(n):
                work[r, c] = mats[i, r, c]
        if not _jacobi_one(work, tol, max_sweeps):
            ok = False
        for r in range(n):
            out[i, r] = work[r, r]
    return out, ok
