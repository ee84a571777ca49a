"""Symmetric eigenvalues, convex domains in R^n, and multistart minimisation."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

from tubenv.tolerances import TOL
from tubenv import _kernels
from tubenv.polyalg import Poly, RealPoly, hessian_polys, evaluate_matrix


class SymmetryError(ValueError):
    pass


class ProjectionError(RuntimeError):
    """Iterative projection hit its iteration cap."""


class DegeneratePointError(ValueError):
    """Gradient of a defining function vanishes at the requested point."""


class DomainConfigError(ValueError):
    pass


def check_symmetric(M, tol: float | None = None) -> np.ndarray:
    tol = TOL.symmetry if tol is None else tol
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise SymmetryError(f"expected square matrices, got shape {M.shape}")
    asym = np.max(np.abs(M - np.swapaxes(M, -1, -2)), initial=0.0)
    if asym >= tol * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise SymmetryError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    return M


def sym_eigenvalues(M) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    M = check_symmetric(M)
    if M.ndim != 2:
        raise SymmetryError("sym_eigenvalues takes a single matrix; use sym_eigenvalues_batch")
    return _kernels.jacobi_eigenvalues(M[None])[0]


def sym_eigenvalues_batch(Ms) -> np.ndarray:
    """Ascending eigenvalues for a ``(..., n, n)`` stack of symmetric matrices."""
    Ms = check_symmetric(Ms)
    lead = Ms.shape[:-2]
    n = Ms.shape[-1]
    vals = _kernels.jacobi_eigenvalues(Ms.reshape(-1, n, n))
    return vals.reshape(lead + (n,))


def halton(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """Deterministic scrambled Halton points in ``[0, 1)^dim``."""
    if count <= 0:
        return np.empty((0, dim))
    return qmc.Halton(d=dim, scramble=True, seed=seed).random(count)


def sphere_points(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform unit vectors (Halton pushed through the normal quantile)."""
    from scipy.special import ndtri

    u = np.clip(halton(count, dim, seed), 1e-12, 1 - 1e-12)
    g = ndtri(u)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return g / norms


# ---------------------------------------------------------------------------
# convex domains

class ConvexDomain:
    """Base class; subclasses are Ball, Box, Polytope."""

    kind: str = ""

    @property
    def dim(self) -> int:
        raise NotImplementedError

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        """Membership in the closure, with slack ``tol``."""
        raise NotImplementedError

    def interior_contains(self, x) -> np.ndarray:
        """Membership in the open domain."""
        raise NotImplementedError

    def project(self, p) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform samples of the closure."""
        raise NotImplementedError

    def boundary_sample(self, count: int, seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    def _check_dim(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"point dimension {x.shape[-1:]} does not match domain dimension {self.dim}")
        return x


@dataclass(frozen=True, eq=False)
class Ball(ConvexDomain):
    center: np.ndarray
    radius: float
    kind = "ball"

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        if c.ndim != 1:
            raise DomainConfigError("ball center must be a vector")
        if not float(self.radius) > 0:
            raise DomainConfigError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return self.center.size

    @property
    def origin_centered(self) -> bool:
        return bool(np.all(self.center == 0))

    def contains(self, x, tol=0.0):
        x = self._check_dim(x)
        return np.linalg.norm(x - self.center, axis=-1) <= self.radius + tol

    def interior_contains(self, x):
        x = self._check_dim(x)
        return np.linalg.norm(x - self.center, axis=-1) < self.radius

    def project(self, p):
        p = self._check_dim(p)
        d = p - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(r > self.radius, self.radius / np.where(r > 0, r, 1.0), 1.0)
        return self.center + d * scale

    def project_boundary(self, p):
        p = self._check_dim(p)
        d = p - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        d = np.where(r > 0, d, e1)
        r = np.where(r > 0, r, 1.0)
        return self.center + self.radius * d / r

    def support(self, direction):
        d = np.asarray(direction, dtype=float)
        return float(self.center @ d + self.radius * np.linalg.norm(d))

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def sample(self, count, rng):
        g = rng.standard_normal((count, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(count) ** (1.0 / self.dim)
        return self.center + g * r[:, None]

    def boundary_sample(self, count, seed=0):
        return self.center + self.radius * sphere_points(count, self.dim, seed)

    def defining_function(self) -> RealPoly:
        """``||x - c||^2 - rho^2``, negative inside."""
        n = self.dim
        terms = {}
        const = float(self.center @ self.center) - self.radius**2
        terms[(0,) * n] = const
        for j in range(n):
            e2 = [0] * n
            e2[j] = 2
            terms[tuple(e2)] = 1.0
            if self.center[j]:
                e1 = [0] * n
                e1[j] = 1
                terms[tuple(e1)] = -2.0 * self.center[j]
        return RealPoly(n, terms)

    def to_config(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Box(ConvexDomain):
    lo: np.ndarray
    hi: np.ndarray
    kind = "box"

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DomainConfigError("box lo and hi must be vectors of equal length")
        if not np.all(lo < hi):
            raise DomainConfigError("box requires lo < hi componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.size

    def contains(self, x, tol=0.0):
        x = self._check_dim(x)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=-1)

    def interior_contains(self, x):
        x = self._check_dim(x)
        return np.all((x > self.lo) & (x < self.hi), axis=-1)

    def project(self, p):
        return np.clip(self._check_dim(p), self.lo, self.hi)

    def support(self, direction):
        d = np.asarray(direction, dtype=float)
        return float(np.sum(np.where(d >= 0, d * self.hi, d * self.lo)))

    def bounding_box(self):
        return self.lo.copy(), self.hi.copy()

    def sample(self, count, rng):
        return self.lo + (self.hi - self.lo) * rng.random((count, self.dim))

    def faces(self):
        """``(axis, value)`` for each of the ``2n`` faces."""
        return [(j, side) for j in range(self.dim) for side in (self.lo[j], self.hi[j])]

    def boundary_sample(self, count, seed=0):
        u = halton(count, self.dim, seed)
        pts = self.lo + (self.hi - self.lo) * u
        face = np.arange(count) % (2 * self.dim)
        axis = face // 2
        rows = np.arange(count)
        pts[rows, axis] = np.where(face % 2 == 0, self.lo[axis], self.hi[axis])
        return pts

    def to_config(self):
        return {"kind": "box", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


def _dykstra(p, halfspaces, hyperplanes=(), tol=1e-12, max_iter=20000):
    """Euclidean projection of rows of ``p`` onto an intersection of half-spaces."""
    x = np.array(p, dtype=float, copy=True)
    sets = [(a, b, False) for a, b in halfspaces] + [(a, b, True) for a, b in hyperplanes]
    incr = [np.zeros_like(x) for _ in sets]
    for it in range(max_iter):
        prev = x.copy()
        for k, (a, b, eq) in enumerate(sets):
            y = x + incr[k]
            viol = y @ a - b
            if not eq:
                viol = np.maximum(viol, 0.0)
            new = y - np.outer(viol, a) / (a @ a)
            incr[k] = y - new
            x = new
        if np.max(np.abs(x - prev), initial=0.0) <= tol * (1.0 + np.max(np.abs(x), initial=0.0)):
            return x
    raise ProjectionError(f"Dykstra projection did not converge in {max_iter} sweeps")


@dataclass(frozen=True, eq=False)
class Polytope(ConvexDomain):
    A: np.ndarray
    b: np.ndarray
    outer_approximation: bool = field(default=False)
    kind = "polytope"

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if A.shape[0] != b.size:
            raise DomainConfigError("polytope A rows must match b length")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise DomainConfigError("polytope has a zero constraint row")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        self._probe()

    def _probe(self):
        n = self.dim
        res = linprog(np.zeros(n), A_ub=self.A, b_ub=self.b, bounds=[(None, None)] * n, method="highs")
        if res.status != 0:
            raise DomainConfigError("polytope is empty")
        lo, hi = self.bounding_box()
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise DomainConfigError("polytope is unbounded")
        if self.chebyshev[1] <= 0:
            raise DomainConfigError("polytope has empty interior")

    @property
    def dim(self):
        return self.A.shape[1]

    def _lp_max(self, d):
        res = linprog(-np.asarray(d, dtype=float), A_ub=self.A, b_ub=self.b,
                      bounds=[(None, None)] * self.dim, method="highs")
        if res.status == 3:
            return np.inf
        if res.status != 0:
            raise DomainConfigError(f"support LP failed: {res.message}")
        return -res.fun

    @cached_property
    def _bbox(self):
        eye = np.eye(self.dim)
        hi = np.array([self._lp_max(e) for e in eye])
        lo = np.array([-self._lp_max(-e) for e in eye])
        return lo, hi

    @cached_property
    def chebyshev(self):
        """Centre and radius of the largest inscribed ball."""
        n = self.dim
        norms = np.linalg.norm(self.A, axis=1)
        c = np.zeros(n + 1)
        c[-1] = -1.0
        res = linprog(c, A_ub=np.hstack([self.A, norms[:, None]]), b_ub=self.b,
                      bounds=[(None, None)] * n + [(0, None)], method="highs")
        return res.x[:n], float(res.x[-1])

    def contains(self, x, tol=0.0):
        x = self._check_dim(x)
        return np.all(x @ self.A.T <= self.b + tol, axis=-1)

    def interior_contains(self, x):
        x = self._check_dim(x)
        return np.all(x @ self.A.T < self.b, axis=-1)

    def project(self, p):
        p = self._check_dim(p)
        flat = p.reshape(-1, self.dim)
        inside = self.contains(flat)
        out = flat.copy()
        if not np.all(inside):
            out[~inside] = _dykstra(flat[~inside], list(zip(self.A, self.b)))
        return out.reshape(p.shape)

    def project_face(self, p, i):
        p = self._check_dim(p)
        flat = p.reshape(-1, self.dim)
        out = _dykstra(flat, list(zip(self.A, self.b)), [(self.A[i], self.b[i])])
        return out.reshape(p.shape)

    def support(self, direction):
        return float(self._lp_max(direction))

    def bounding_box(self):
        lo, hi = self._bbox
        return lo.copy(), hi.copy()

    def sample(self, count, rng):
        lo, hi = self.bounding_box()
        out = []
        got = 0
        while got < count:
            cand = lo + (hi - lo) * rng.random((max(2 * count, 64), self.dim))
            cand = cand[self.contains(cand)]
            out.append(cand)
            got += len(cand)
        return np.concatenate(out)[:count]

    def ray_to_boundary(self, directions):
        """Boundary points hit by rays from the Chebyshev centre."""
        c, _ = self.chebyshev
        d = np.atleast_2d(directions)
        rate = d @ self.A.T
        slack = self.b - self.A @ c
        with np.errstate(divide="ignore"):
            t = np.where(rate > 1e-15, slack / np.where(rate > 1e-15, rate, 1.0), np.inf)
        return c + d * t.min(axis=1, keepdims=True)

    def boundary_sample(self, count, seed=0):
        return self.ray_to_boundary(sphere_points(count, self.dim, seed))

    def to_config(self):
        return {"kind": "polytope", "A": self.A.tolist(), "b": self.b.tolist()}


def domain_from_config(cfg: dict) -> ConvexDomain:
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise DomainConfigError("domain config needs a 'kind' field")
    kind = cfg["kind"]
    try:
        if kind == "ball":
            return Ball(cfg["center"], cfg["radius"])
        if kind == "box":
            return Box(cfg["lo"], cfg["hi"])
        if kind == "polytope":
            return Polytope(cfg["A"], cfg["b"])
    except KeyError as exc:
        raise DomainConfigError(f"{kind} config is missing {exc}") from None
    raise DomainConfigError(f"unknown domain kind {kind!r}")


def ball_outer_polytope(ball: Ball) -> Polytope:
    """Circumscribed polytope with facets normal to the axes and the diagonals."""
    n = ball.dim
    normals = [np.eye(n)[j] * s for j in range(n) for s in (1.0, -1.0)]
    if n <= 6:
        for signs in np.ndindex(*(2,) * n):
            v = np.where(np.array(signs) == 0, 1.0, -1.0)
            normals.append(v / np.sqrt(n))
    A = np.array(normals)
    b = A @ ball.center + ball.radius
    return Polytope(A, b, outer_approximation=True)


def as_polytope(D: ConvexDomain) -> Polytope:
    if isinstance(D, Polytope):
        return D
    if isinstance(D, Box):
        n = D.dim
        A = np.vstack([np.eye(n), -np.eye(n)])
        return Polytope(A, np.concatenate([D.hi, -D.lo]))
    return ball_outer_polytope(D)


# ---------------------------------------------------------------------------
# minimisation

class _Product:
    """Cartesian product of feasible sets; coordinates concatenated."""

    def __init__(self, parts):
        self.parts = list(parts)
        self.sizes = [p.dim for p in self.parts]
        self.dim = sum(self.sizes)

    def project(self, p):
        out = []
        start = 0
        for part, size in zip(self.parts, self.sizes):
            out.append(part.project(p[..., start:start + size]))
            start += size
        return np.concatenate(out, axis=-1)

    def bounding_box(self):
        boxes = [p.bounding_box() for p in self.parts]
        return np.concatenate([b[0] for b in boxes]), np.concatenate([b[1] for b in boxes])


class BallSurface:
    """The sphere ``bB`` as a feasible set (projection = radial retraction)."""

    def __init__(self, ball: Ball):
        self.ball = ball
        self.dim = ball.dim

    def project(self, p):
        return self.ball.project_boundary(p)

    def bounding_box(self):
        return self.ball.bounding_box()


class BoxFace:
    def __init__(self, box: Box, axis: int, value: float):
        self.box, self.axis, self.value = box, axis, value
        self.dim = box.dim

    def project(self, p):
        q = self.box.project(p)
        q[..., self.axis] = self.value
        return q

    def bounding_box(self):
        lo, hi = self.box.bounding_box()
        lo[self.axis] = hi[self.axis] = self.value
        return lo, hi


class PolytopeFace:
    def __init__(self, poly: Polytope, index: int):
        self.poly, self.index = poly, index
        self.dim = poly.dim

    def project(self, p):
        return self.poly.project_face(p, self.index)

    def bounding_box(self):
        return self.poly.bounding_box()


def boundary_pieces(D: ConvexDomain) -> list:
    """Feasible sets whose union is ``bD``."""
    if isinstance(D, Ball):
        return [BallSurface(D)]
    if isinstance(D, Box):
        return [BoxFace(D, j, v) for j, v in D.faces()]
    return [PolytopeFace(D, i) for i in range(D.A.shape[0])]


def _as_feasible(D):
    if isinstance(D, (tuple, list)):
        return _Product(D)
    return D


def projected_descent(feasible, objective, starts, *, max_iter=300, tol=1e-12, fd_step=1e-6):
    """Projected gradient descent with finite-difference gradients, vectorised over starts.

    ``objective`` maps ``(m, d)`` to ``(m,)``. Returns ``(points, values)``.
    """
    X = feasible.project(np.array(starts, dtype=float))
    m, d = X.shape
    f = objective(X)
    lo, hi = feasible.bounding_box()
    scale = max(float(np.max(hi - lo)), 1e-3)
    step = np.full(m, 0.1 * scale)
    active = np.ones(m, dtype=bool)
    eye = np.eye(d)
    for _ in range(max_iter):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        Xa = X[idx]
        h = fd_step * np.maximum(1.0, np.abs(Xa))
        probes = np.concatenate([Xa[:, None, :] + h[:, None, :] * eye, Xa[:, None, :] - h[:, None, :] * eye], axis=1)
        fp = objective(probes.reshape(-1, d)).reshape(len(idx), 2 * d)
        g = (fp[:, :d] - fp[:, d:]) / (2.0 * h)
        st = step[idx]
        accepted = np.zeros(len(idx), dtype=bool)
        newX = Xa.copy()
        newf = f[idx].copy()
        for _ in range(40):
            todo = ~accepted
            if not np.any(todo):
                break
            trial = feasible.project(Xa[todo] - st[todo, None] * g[todo])
            ft = objective(trial)
            move = np.sum((trial - Xa[todo]) ** 2, axis=1)
            ok = ft <= f[idx][todo] - 1e-4 * move / st[todo]
            sel = np.flatnonzero(todo)[ok]
            newX[sel] = trial[ok]
            newf[sel] = ft[ok]
            accepted[sel] = True
            st[np.flatnonzero(todo)[~ok]] *= 0.5
        moved = np.linalg.norm(newX - Xa, axis=1)
        X[idx] = newX
        f[idx] = newf
        step[idx] = np.where(accepted, np.minimum(st * 2.0, scale), st)
        done = (~accepted) | (moved <= tol * (1.0 + np.linalg.norm(Xa, axis=1)))
        active[idx[done]] = False
    return X, f


def minimize_over(D, objective: Callable, seeds: int = 16, *, seed: int = 0, batched: bool = False,
                  max_iter: int = 300, extra_starts=None):
    """Best local minimum of ``objective`` over ``closure(D)`` from Halton multistarts.

    ``D`` is a ConvexDomain, a feasible set (e.g. :class:`BallSurface`) or a
    pair of them for a product. Results are sampled, never certified.
    """
    feasible = _as_feasible(D)
    fun = objective if batched else (lambda P: np.array([float(objective(p)) for p in P]))
    lo, hi = feasible.bounding_box()
    starts = lo + (hi - lo) * halton(max(int(seeds), 1), feasible.dim, seed)
    if extra_starts is not None:
        starts = np.vstack([starts, np.atleast_2d(extra_starts)])
    X, f = projected_descent(feasible, fun, starts, max_iter=max_iter)
    best = int(np.argmin(f))
    return X[best], float(f[best])


# ---------------------------------------------------------------------------
# verdicts and strict convexity

class PDStatus(str, enum.Enum):
    CERTIFIED_EXACT = "CertifiedExact"
    SAMPLED_PASS = "SampledPass"
    REFUTED = "Refuted"


@dataclass
class PDWitness:
    x: np.ndarray
    y0: np.ndarray
    min_eigenvalue: float
    direction: np.ndarray | None = None

    def to_record(self):
        rec = {"x": np.asarray(self.x).tolist(), "y0": np.asarray(self.y0).tolist(),
               "min_eigenvalue": float(self.min_eigenvalue)}
        if self.direction is not None:
            rec["direction"] = np.asarray(self.direction).tolist()
        return rec


@dataclass
class PDVerdict:
    status: PDStatus
    min_eigenvalue_found: float
    witness: PDWitness | None = None
    x_box: tuple | None = None
    samples: int = 0
    note: str = ""

    def __post_init__(self):
        if self.status is PDStatus.REFUTED and (
            self.witness is None or self.witness.min_eigenvalue > TOL.pd_threshold
        ):
            raise ValueError("a Refuted verdict needs a witness with eigenvalue at or below the threshold")

    @property
    def usable(self) -> bool:
        return self.status is not PDStatus.REFUTED

    def to_record(self):
        rec = {"status": self.status.value, "min_eigenvalue": float(self.min_eigenvalue_found),
               "samples": int(self.samples)}
        if self.witness is not None:
            rec["witness"] = self.witness.to_record()
        if self.x_box is not None:
            rec["x_box"] = {"lo": np.asarray(self.x_box[0]).tolist(), "hi": np.asarray(self.x_box[1]).tolist()}
        if self.note:
            rec["note"] = self.note
        return rec


@dataclass
class ConvexityVerdict:
    min_tangential_eigenvalue: float
    gradient_norm: float

    @property
    def strictly_convex(self) -> bool:
        return self.min_tangential_eigenvalue > TOL.pd_threshold


def tangent_basis(normal) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of ``normal``."""
    normal = np.atleast_2d(normal)
    _, _, vh = np.linalg.svd(normal)
    return vh[normal.shape[0]:].conj().T


def strict_convexity_at(r: Poly, p, grad_tol: float | None = None) -> ConvexityVerdict:
    """Minimum eigenvalue of the Hessian of ``r`` on the tangent space of ``{r = 0}`` at ``p``."""
    p = np.asarray(p, dtype=float)
    n = r.nvars
    grad = np.array([float(np.real(r.differentiate(j)(p))) for j in range(n)])
    gnorm = float(np.linalg.norm(grad))
    if gnorm <= (TOL.singular if grad_tol is None else grad_tol):
        raise DegeneratePointError(f"gradient vanishes at {p.tolist()} (|grad| = {gnorm:.3e})")
    H = evaluate_matrix(hessian_polys(r, range(n)), p)
    H = 0.5 * (H + H.T)
    B = tangent_basis(grad / gnorm)
    restricted = B.T @ H @ B
    restricted = 0.5 * (restricted + restricted.T)
    lam = sym_eigenvalues(restricted)
    return ConvexityVerdict(float(lam[0]) if lam.size else np.inf, gnorm)
