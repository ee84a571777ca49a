"""Critical points and block-Hessian identities of the level functions sigma and mu."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from tubenv.tolerances import TOL
from tubenv.barrier import SpecialBarrier
from tubenv.errors import PreconditionError
from tubenv.newton import RealSystem, newton_pinv
from tubenv.numgeom import Box, sym_eigenvalues
from tubenv.polyalg import ComplexPoly, Poly, RealPoly, evaluate_matrix, has_mixed_terms, hessian_polys, real_part


class LevelKind(str, enum.Enum):
    SIGMA = "sigma"
    MU = "mu"


def level_function(b: SpecialBarrier, kind) -> RealPoly:
    """``sigma = ||x||^2 - (alpha + f)``; ``mu = sigma - ||y||^2``."""
    kind = LevelKind(kind)
    if kind is LevelKind.SIGMA:
        return b.sigma
    n = b.n
    return b.sigma - RealPoly.sum_of_squares(2 * n, range(n, 2 * n))


@dataclass
class CriticalPoint:
    location: np.ndarray
    gradient_norm: float
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    det: float
    index: int

    @property
    def nondegenerate(self) -> bool:
        return abs(self.det) > TOL.degeneracy

    @property
    def hessian(self) -> np.ndarray:
        return np.block([[self.A, self.B], [self.C, self.D]])

    def to_record(self):
        return {"location": self.location.tolist(), "det": self.det, "index": self.index,
                "nondegenerate": self.nondegenerate,
                "blocks_summary": {name: float(np.max(np.abs(M), initial=0.0))
                                   for name, M in zip("ABCD", (self.A, self.B, self.C, self.D))}}


@dataclass
class CriticalSearch:
    points: list
    continuum: bool
    converged: int
    seeds: int

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]


def analyse_point(p: Poly, pt, hess_polys=None, grad_polys=None) -> CriticalPoint:
    """Block Hessian, determinant and Morse index of ``p`` at ``pt``."""
    d = p.nvars
    hess_polys = hess_polys or hessian_polys(p, range(d))
    grad_polys = grad_polys or [p.differentiate(j) for j in range(d)]
    pt = np.asarray(pt, dtype=float)
    g = np.array([float(np.real(q(pt))) for q in grad_polys])
    H = evaluate_matrix(hess_polys, pt)
    H = 0.5 * (H + H.T)
    half = d // 2 if d % 2 == 0 else d
    A, B = H[:half, :half], H[:half, half:]
    C, D = H[half:, :half], H[half:, half:]
    lam = sym_eigenvalues(H)
    index = int(np.sum(lam < -TOL.degeneracy))
    return CriticalPoint(pt, float(np.linalg.norm(g)), A, B, C, D, float(np.linalg.det(H)), index)


def critical_points(p: Poly, box, seed_grid: int = 5, tol: float | None = None, max_iter: int = 100,
                    extra_seeds=None) -> CriticalSearch:
    """Newton on ``grad p = 0`` from a ``seed_grid^d`` grid over ``box``.

    Converged points inside the box are merged within 1e-6. More than one
    distinct degenerate critical point is reported as a continuum, the
    signature of non-isolated critical sets.
    """
    if not isinstance(box, Box):
        box = Box(*box)
    d = p.nvars
    if box.dim != d:
        raise ValueError(f"box dimension {box.dim} does not match {d} variables")
    grad_polys = [p.differentiate(j) for j in range(d)]
    hess = [[g.differentiate(k) for k in range(d)] for g in grad_polys]
    res = max(1, int(seed_grid))
    axes = [np.linspace(box.lo[j], box.hi[j], res) if res > 1 else np.array([0.5 * (box.lo[j] + box.hi[j])])
            for j in range(d)]
    seeds = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    if extra_seeds is not None:
        seeds = np.vstack([seeds, np.atleast_2d(extra_seeds)])
    if all(g.is_zero() for g in grad_polys):
        # constant polynomial: every point is critical
        return CriticalSearch([], True, len(seeds), len(seeds))
    system = RealSystem(grad_polys)
    W, ok, _ = newton_pinv(system, seeds, tol=TOL.newton if tol is None else tol, max_iter=max_iter)
    ok &= box.contains(W, tol=1e-9)
    found = W[ok]
    # lexicographic order makes the merge deterministic
    found = found[np.lexsort(found.T[::-1])] if len(found) else found
    reps: list[np.ndarray] = []
    for w in found:
        if not any(np.linalg.norm(w - r) <= TOL.dedup for r in reps):
            reps.append(w)
    points = [analyse_point(p, r, hess, grad_polys) for r in reps]
    degenerate = sum(not c.nondegenerate for c in points)
    return CriticalSearch(points, degenerate >= 2, int(ok.sum()), len(seeds))


# ---------------------------------------------------------------------------
# block identities

@dataclass
class BlockRow:
    point: np.ndarray
    max_offdiag: float
    max_d_plus_a: float
    det: float
    det_a: float
    det_rel_error: float | None

    def to_record(self):
        return {"point": self.point.tolist(), "max_offdiag": self.max_offdiag,
                "max_d_plus_a": self.max_d_plus_a, "det": self.det, "det_a": self.det_a,
                "det_rel_error": self.det_rel_error}


@dataclass
class BlockReport:
    kind: LevelKind
    rows: list
    passed: bool

    def to_record(self):
        return {"kind": self.kind.value, "passed": self.passed, "rows": [r.to_record() for r in self.rows]}


def block_identities_check(b: SpecialBarrier, points, kind="mu", offdiag_tol: float = 1e-10,
                           det_tol: float = 1e-8) -> BlockReport:
    """Check the block structure of the Hessian of sigma or mu at the given ``(x, y)`` points.

    For mu: ``B = C = 0``, ``D = -A`` and ``det = (-1)^n det(A)^2``. For sigma
    only ``B = C = 0`` is asserted; D, A and the determinant are reported.
    """
    n = b.n
    if has_mixed_terms(b.f, n):
        raise PreconditionError("augmenting function mixes x and y; block identities need f = f1(x) + f2(y)")
    kind = LevelKind(kind)
    p = level_function(b, kind)
    hess = hessian_polys(p, range(2 * n))
    rows, passed = [], True
    for pt in np.atleast_2d(np.asarray(points, dtype=float)):
        H = evaluate_matrix(hess, pt)
        H = 0.5 * (H + H.T)
        A, B, C, D = H[:n, :n], H[:n, n:], H[n:, :n], H[n:, n:]
        off = float(max(np.max(np.abs(B)), np.max(np.abs(C))))
        dsum = float(np.max(np.abs(D + A)))
        det = float(np.linalg.det(H))
        det_a = float(np.linalg.det(A))
        rel = None
        ok = off < offdiag_tol
        if kind is LevelKind.MU:
            expected = (-1) ** n * det_a**2
            scale = max(abs(det), abs(expected))
            rel = 0.0 if scale < 1e-300 else abs(det - expected) / scale
            ok = ok and dsum < offdiag_tol and rel < det_tol
        passed = passed and ok
        rows.append(BlockRow(pt, off, dsum, det, det_a, rel))
    return BlockReport(kind, rows, passed)


def block_sum_polys(b: SpecialBarrier, kind="mu") -> list[list[RealPoly]]:
    """Symbolic ``D + A`` of the level function (zero for mu when f is separable)."""
    n = b.n
    H = hessian_polys(level_function(b, kind), range(2 * n))
    return [[H[n + j][n + k] + H[j][k] for k in range(n)] for j in range(n)]


# ---------------------------------------------------------------------------
# pluriharmonicity

def _real_layout(F: Poly) -> RealPoly:
    """A ComplexPoly in ``z`` gives ``Re F``; a RealPoly is taken as already in ``(x, y)``."""
    if isinstance(F, ComplexPoly):
        return real_part(F)
    if F.nvars % 2:
        raise ValueError("a real-part polynomial needs an even number of variables (x then y)")
    return F


def pluriharmonic_polys(F: Poly) -> list[list[RealPoly]]:
    """``d2/dx_j dx_k + d2/dy_j dy_k`` of the real part, as polynomials."""
    re = _real_layout(F)
    n = re.nvars // 2
    H = hessian_polys(re, range(2 * n))
    return [[H[j][k] + H[n + j][n + k] for k in range(n)] for j in range(n)]


def pluriharmonic_residual_symbolic(F: Poly) -> bool:
    """True when every entry of :func:`pluriharmonic_polys` is the zero polynomial."""
    return all(q.is_zero() for row in pluriharmonic_polys(F) for q in row)


def pluriharmonic_residual(F: Poly, points) -> float:
    """Max over points and ``(j, k)`` of ``|Re F_xjxk + Re F_yjyk|``.

    ``points`` are rows ``(x, y)`` of length ``2n``.
    """
    polys = pluriharmonic_polys(F)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = evaluate_matrix(polys, pts)
    return float(np.max(np.abs(vals), initial=0.0))
