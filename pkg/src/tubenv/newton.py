"""Batched Newton iteration with pseudo-inverse steps for underdetermined real systems."""
from __future__ import annotations

from typing import Callable

import numpy as np

from tubenv.polyalg import Poly


def _min_norm_solve(J, G):
    """``pinv(J) @ G`` row by row; a single equation needs no SVD."""
    if J.shape[1] == 1:
        g = J[:, 0]
        nrm = np.einsum("md,md->m", g, g)
        scale = np.divide(G[:, 0], nrm, out=np.zeros_like(nrm), where=nrm > 0)
        return g * scale[:, None]
    return np.einsum("mdk,mk->md", np.linalg.pinv(J), G)


def newton_pinv(system: Callable, W0, tol: float = 1e-10, max_iter: int = 100, polish: int = 2):
    """Drive ``G(W) = 0`` from every row of ``W0``.

    ``system(W)`` returns ``(G, J)`` with shapes ``(m, k)`` and ``(m, k, d)``.
    Each step is the minimum-norm correction ``-pinv(J) G``. Rows whose
    residual drops below ``tol`` get ``polish`` extra steps and are frozen.
    Returns ``(W, converged, residual_norm)``.
    """
    W = np.array(W0, dtype=float, copy=True)
    m = len(W)
    converged = np.zeros(m, dtype=bool)
    extra = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    for _ in range(max_iter + polish):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        G, J = system(W[idx])
        res = np.linalg.norm(G, axis=1)
        hit = res < tol
        converged[idx[hit]] = True
        extra[idx[hit]] += 1
        finite = np.all(np.isfinite(G), axis=1) & np.all(np.isfinite(J), axis=(1, 2))
        step = np.zeros_like(W[idx])
        if np.any(finite):
            step[finite] = -_min_norm_solve(J[finite], G[finite])
        W[idx] += step
        done = (extra[idx] > polish) | ~finite
        active[idx[done]] = False
    G, _ = system(W)
    res = np.linalg.norm(G, axis=1)
    converged &= res < tol
    return W, converged, res


class HolomorphicMap:
    """A holomorphic polynomial viewed as the real map ``(x, y) -> (Re P, Im P)``."""

    def __init__(self, P: Poly):
        self.P = P
        self.n = P.nvars
        self.grad = [P.differentiate(j) for j in range(self.n)]

    def values(self, W) -> np.ndarray:
        n = self.n
        return np.asarray(self.P._evaluate(W[..., :n] + 1j * W[..., n:]), dtype=complex)

    def jacobian(self, W) -> np.ndarray:
        """``(m, 2, 2n)`` real Jacobian from the complex derivative (Cauchy-Riemann)."""
        n = self.n
        Z = W[:, :n] + 1j * W[:, n:]
        d = np.stack([np.asarray(g._evaluate(Z), dtype=complex) for g in self.grad], axis=-1)
        J = np.empty((len(W), 2, 2 * n))
        J[:, 0, :n], J[:, 0, n:] = d.real, -d.imag
        J[:, 1, :n], J[:, 1, n:] = d.imag, d.real
        return J


class RealSystem:
    """Real polynomials ``p_1..p_k`` in ``d`` variables as a Newton system."""

    def __init__(self, polys):
        self.polys = list(polys)
        d = self.polys[0].nvars
        self.grads = [[p.differentiate(j) for j in range(d)] for p in self.polys]

    def __call__(self, W):
        G = np.stack([np.real(p._evaluate(W)) for p in self.polys], axis=1)
        J = np.stack([np.stack([np.real(g._evaluate(W)) for g in row], axis=-1) for row in self.grads], axis=1)
        return G, J
