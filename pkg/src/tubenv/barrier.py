"""Special barriers: a real polynomial alpha whose barrier matrix
``2I - Hess_x(alpha + f(., y0))`` stays positive definite for y0 in the closure of Y."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from tubenv.tolerances import TOL
from tubenv.numgeom import (
    Ball,
    Box,
    ConvexDomain,
    PDStatus,
    PDVerdict,
    PDWitness,
    Polytope,
    as_polytope,
    domain_from_config,
    halton,
    sym_eigenvalues,
    sym_eigenvalues_batch,
)
from tubenv.polyalg import (
    ComplexPoly,
    RealPoly,
    augmenting_decomposition,
    constant_value,
    evaluate_matrix,
    hessian_polys,
    holomorphic_extension,
    is_constant,
    lift_x,
)

GRID_BUDGET = 20000


class DomainError(ValueError):
    """A point lies outside the set an operation is defined on."""


@dataclass(frozen=True, eq=False)
class SpecialBarrier:
    alpha: RealPoly
    F_alpha: ComplexPoly
    f: RealPoly
    Y: ConvexDomain
    verdict: PDVerdict | None = None
    x_box: tuple | None = None
    flags: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.alpha.nvars

    @property
    def usable(self) -> bool:
        return self.verdict is not None and self.verdict.usable

    @cached_property
    def fence_function(self) -> RealPoly:
        """``alpha(x) + f(x, y)`` in the ``(x, y)`` layout."""
        return lift_x(self.alpha) + self.f

    @cached_property
    def sigma(self) -> RealPoly:
        """``||x||^2 - alpha(x) - f(x, y)``; the fence is where this is <= 0."""
        n = self.n
        return RealPoly.sum_of_squares(2 * n, range(n)) - self.fence_function

    @cached_property
    def matrix_polys(self):
        return hessian_polys(self.sigma, range(self.n))

    def to_record(self) -> dict:
        rec = {"alpha": self.alpha.to_literal(), "f": self.f.to_literal(), "Y": self.Y.to_config()}
        if self.verdict is not None:
            rec["verdict"] = self.verdict.to_record()
        if self.flags:
            rec["flags"] = list(self.flags)
        return rec


def _decompose(alpha: RealPoly):
    F = holomorphic_extension(alpha)
    alpha_x, f = augmenting_decomposition(F)
    return F, alpha_x, f


def default_x_box(X: ConvexDomain | None, n: int):
    """Bounding box of X inflated by 50%, or ``[-1.5, 1.5]^n`` without X."""
    if X is None:
        return -1.5 * np.ones(n), 1.5 * np.ones(n)
    lo, hi = X.bounding_box()
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid - 1.5 * half, mid + 1.5 * half


def build_barrier(alpha: RealPoly, Y: ConvexDomain, X: ConvexDomain | None = None,
                  x_box=None, grid_resolution: int = 9) -> SpecialBarrier:
    """Extend alpha holomorphically, split off f, and attach a certification verdict.

    A refuted barrier is still returned; check ``usable`` or ``verdict.status``.
    """
    if alpha.nvars != Y.dim:
        raise ValueError(f"alpha has {alpha.nvars} variables but Y lives in R^{Y.dim}")
    if x_box is None:
        x_box = default_x_box(X, alpha.nvars)
    F, alpha_x, f = _decompose(alpha)
    b = SpecialBarrier(alpha_x, F, f, Y, None, (np.asarray(x_box[0], float), np.asarray(x_box[1], float)))
    return _with_verdict(b, certify_special(b, grid_resolution, b.x_box))


def _with_verdict(b: SpecialBarrier, verdict: PDVerdict) -> SpecialBarrier:
    return SpecialBarrier(b.alpha, b.F_alpha, b.f, b.Y, verdict, b.x_box, b.flags)


def barrier_from_config(cfg: dict, X: ConvexDomain | None = None, grid_resolution: int = 9) -> SpecialBarrier:
    if "alpha" not in cfg or "Y" not in cfg:
        raise ValueError("barrier config needs 'alpha' and 'Y'")
    Y = domain_from_config(cfg["Y"])
    alpha = RealPoly.from_literal(Y.dim, cfg["alpha"])
    return build_barrier(alpha, Y, X=X, grid_resolution=grid_resolution)


def barrier_hessian(b: SpecialBarrier, x, y0) -> np.ndarray:
    """The barrier matrix at ``(x, y0)``; ``y0`` must lie in the closure of Y."""
    x = np.asarray(x, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    if x.shape != (b.n,) or y0.shape != (b.n,):
        raise ValueError(f"expected x and y0 of length {b.n}")
    if not b.Y.contains(y0, tol=TOL.fence):
        raise DomainError(f"y0 = {y0.tolist()} is outside the closure of Y")
    M = evaluate_matrix(b.matrix_polys, np.concatenate([x, y0]))
    return 0.5 * (M + M.T)


def _min_eigvec(M, lam):
    _, _, vh = np.linalg.svd(M - lam * np.eye(len(M)))
    v = vh[-1]
    k = int(np.argmax(np.abs(v)))
    return v * np.sign(v[k])


def _y_samples(Y: ConvexDomain, res: int, seed: int = 0) -> np.ndarray:
    """Deterministic points of the closure of Y: a filtered grid plus boundary points."""
    lo, hi = Y.bounding_box()
    n = Y.dim
    per_axis = max(2, res)
    if per_axis ** n <= 4096:
        axes = [np.linspace(lo[j], hi[j], per_axis) for j in range(n)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    else:
        grid = lo + (hi - lo) * halton(4096, n, seed)
    grid = grid[Y.contains(grid)]
    center = 0.5 * (lo + hi)
    if isinstance(Y, Polytope):
        center = Y.chebyshev[0]
    pts = np.vstack([center[None], grid, Y.boundary_sample(max(4 * n, 16), seed)])
    return pts


def certify_special(b: SpecialBarrier, grid_resolution: int = 9, x_box=None) -> PDVerdict:
    """Three-valued positive-definiteness verdict for the barrier matrix.

    Constant matrix polynomials (degree <= 2, no useful y dependence) give an
    exact verdict; anything else is a grid search over ``x_box`` and Y, which
    can refute but only ever reports a sampled pass.
    """
    n = b.n
    if x_box is None:
        x_box = b.x_box if b.x_box is not None else default_x_box(None, n)
    lo, hi = (np.asarray(x_box[0], float), np.asarray(x_box[1], float))
    polys = b.matrix_polys
    y_center = _y_samples(b.Y, 2)[0]
    if all(is_constant(p) for row in polys for p in row):
        M = np.array([[float(np.real(constant_value(p))) for p in row] for row in polys])
        lam = sym_eigenvalues(M)
        wit = PDWitness(0.5 * (lo + hi), y_center, float(lam[0]), _min_eigvec(M, lam[0]))
        if lam[0] > TOL.pd_threshold:
            return PDVerdict(PDStatus.CERTIFIED_EXACT, float(lam[0]), None, None, 1)
        return PDVerdict(PDStatus.REFUTED, float(lam[0]), wit, None, 1)

    depends_on_y = any(any(any(k[n:]) for k in p.terms) for row in polys for p in row)
    ys = _y_samples(b.Y, grid_resolution) if depends_on_y else y_center[None]
    res = max(2, int(grid_resolution))
    if res ** n * len(ys) <= GRID_BUDGET:
        axes = [np.linspace(lo[j], hi[j], res) for j in range(n)]
        xs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
        X_, Y_ = np.repeat(xs, len(ys), axis=0), np.tile(ys, (len(xs), 1))
    else:
        count = GRID_BUDGET
        X_ = lo + (hi - lo) * halton(count, n, seed=1)
        Y_ = ys[np.arange(count) % len(ys)]
    pts = np.hstack([X_, Y_])
    mats = evaluate_matrix(polys, pts)
    mats = 0.5 * (mats + np.swapaxes(mats, 1, 2))
    lam = sym_eigenvalues_batch(mats)[:, 0]
    worst = int(np.argmin(lam))
    wit = PDWitness(X_[worst], Y_[worst], float(lam[worst]), _min_eigvec(mats[worst], lam[worst]))
    if lam[worst] > TOL.pd_threshold:
        return PDVerdict(PDStatus.SAMPLED_PASS, float(lam[worst]), None, (lo, hi), len(pts),
                         note="grid search over x_box; not a certificate for all of R^n")
    return PDVerdict(PDStatus.REFUTED, float(lam[worst]), wit, (lo, hi), len(pts))


def merge_verdicts(*verdicts: PDVerdict) -> PDVerdict:
    """Refuted dominates, then SampledPass, then CertifiedExact."""
    rank = {PDStatus.REFUTED: 0, PDStatus.SAMPLED_PASS: 1, PDStatus.CERTIFIED_EXACT: 2}
    worst = min(verdicts, key=lambda v: (rank[v.status], v.min_eigenvalue_found))
    low = min(v.min_eigenvalue_found for v in verdicts)
    return PDVerdict(worst.status, low, worst.witness, worst.x_box, sum(v.samples for v in verdicts), worst.note)


def intersect_domains(Y1: ConvexDomain, Y2: ConvexDomain) -> tuple[ConvexDomain, bool]:
    """A descriptor of ``Y1 & Y2`` and whether it is only an outer approximation."""
    if Y1.dim != Y2.dim:
        raise ValueError("domains live in different dimensions")
    if isinstance(Y1, Ball) and isinstance(Y2, Ball):
        gap = float(np.linalg.norm(Y1.center - Y2.center))
        small, big = (Y1, Y2) if Y1.radius <= Y2.radius else (Y2, Y1)
        if gap + small.radius <= big.radius:
            return small, False
    if isinstance(Y1, Box) and isinstance(Y2, Box):
        return Box(np.maximum(Y1.lo, Y2.lo), np.minimum(Y1.hi, Y2.hi)), False
    P1, P2 = as_polytope(Y1), as_polytope(Y2)
    outer = isinstance(Y1, Ball) or isinstance(Y2, Ball)
    return Polytope(np.vstack([P1.A, P2.A]), np.concatenate([P1.b, P2.b]), outer_approximation=outer), outer


def convex_combine(b1: SpecialBarrier, b2: SpecialBarrier, t: float, grid_resolution: int = 9) -> SpecialBarrier:
    """``t * b1 + (1 - t) * b2`` over ``Y1 & Y2``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if b1.n != b2.n:
        raise ValueError("barriers have different dimensions")
    alpha = b1.alpha * t + b2.alpha * (1.0 - t)
    f = b1.f * t + b2.f * (1.0 - t)
    Y, outer = intersect_domains(b1.Y, b2.Y)
    boxes = [bx for bx in (b1.x_box, b2.x_box) if bx is not None]
    x_box = None
    if boxes:
        x_box = (np.min([bx[0] for bx in boxes], axis=0), np.max([bx[1] for bx in boxes], axis=0))
    flags = ("Y intersection is a sampled outer approximation",) if outer else ()
    b = SpecialBarrier(alpha, holomorphic_extension(alpha), f, Y, None, x_box, flags)
    return _with_verdict(b, certify_special(b, grid_resolution, x_box))
