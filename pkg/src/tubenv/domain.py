"""Compact fences, special domains and truncated tubes as membership-testable sets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tubenv.tolerances import TOL
from tubenv.barrier import DomainError, SpecialBarrier
from tubenv.errors import PreconditionError, UnsupportedHypothesisError
from tubenv.numgeom import (
    Ball,
    Box,
    ConvexDomain,
    minimize_over,
    boundary_pieces,
    sphere_points,
    strict_convexity_at,
)
from tubenv.polyalg import ComplexPoint, DimensionError, RealPoly, as_point


def _scalarize(arr):
    arr = np.asarray(arr)
    return bool(arr) if arr.ndim == 0 else arr


def _split(z, n: int) -> ComplexPoint:
    z = as_point(z)
    if np.shape(z.x)[-1:] != (n,):
        raise DimensionError(f"point dimension {np.shape(z.x)[-1:]} does not match n = {n}")
    return z


@dataclass(frozen=True, eq=False)
class CompactFence:
    """``{x + iy : ||x||^2 <= alpha(x) + f(x, y), y in closure(Y)}``."""

    barrier: SpecialBarrier

    @property
    def n(self) -> int:
        return self.barrier.n

    @property
    def Y(self) -> ConvexDomain:
        return self.barrier.Y

    def sigma(self, z) -> np.ndarray:
        p = _split(z, self.n)
        return np.asarray(self.barrier.sigma(p.stacked()))

    def slice_function(self, y0) -> RealPoly:
        """``x -> ||x||^2 - alpha(x) - f(x, y0)``."""
        n = self.n
        return self.barrier.sigma.restrict({n + j: float(v) for j, v in enumerate(y0)})


def fence_contains(K: CompactFence, z, tol: float | None = None):
    tol = TOL.fence if tol is None else tol
    p = _split(z, K.n)
    inside = (K.sigma(p) <= tol) & K.Y.contains(p.y, tol=TOL.fence)
    return _scalarize(inside)


@dataclass
class MarginRecord:
    margin: float
    argmin: ComplexPoint
    passed: bool
    label: str = "sampled"
    starts: int = 0

    def to_record(self):
        return {"margin": self.margin, "passed": self.passed, "label": self.label,
                "argmin": {"x": np.asarray(self.argmin.x).tolist(), "y": np.asarray(self.argmin.y).tolist()},
                "starts": self.starts}


def convex_initial_check(X: ConvexDomain, K: CompactFence, seeds: int = 32, seed: int = 0) -> MarginRecord:
    """Sampled infimum of ``||x||^2 - alpha - f`` over ``bX x closure(Y)``; passes iff > 1e-9."""
    n = K.n
    if X.dim != n:
        raise DimensionError("X and the fence live in different dimensions")
    sigma = K.barrier.sigma
    best_val, best_pt, total = np.inf, None, 0
    y_anchor = K.Y.project(0.5 * np.add(*K.Y.bounding_box()))
    bx = X.boundary_sample(max(seeds, 8), seed)
    for k, piece in enumerate(boundary_pieces(X)):
        extra = np.hstack([piece.project(bx), np.tile(y_anchor, (len(bx), 1))])
        argmin, val = minimize_over((piece, K.Y), sigma, seeds, seed=seed + k, batched=True, extra_starts=extra)
        total += seeds + len(extra)
        if val < best_val:
            best_val, best_pt = val, argmin
    point = ComplexPoint.of(best_pt[:n], best_pt[n:])
    return MarginRecord(float(best_val), point, bool(best_val > TOL.initial_margin), "sampled", total)


@dataclass
class ConvexityRecord:
    min_eigenvalue: float
    samples: int

    @property
    def strictly_convex(self) -> bool:
        return self.min_eigenvalue > TOL.pd_threshold

    def to_record(self):
        return {"min_eigenvalue": self.min_eigenvalue, "samples": self.samples,
                "strictly_convex": self.strictly_convex, "label": "sampled"}


def boundary_convexity(X: ConvexDomain, count: int = 32, seed: int = 0) -> ConvexityRecord:
    """Spot check of strict convexity of bX; only balls carry a polynomial defining function."""
    if not isinstance(X, Ball):
        return ConvexityRecord(0.0, 0)
    r = X.defining_function()
    pts = X.boundary_sample(count, seed)
    low = min(strict_convexity_at(r, p).min_tangential_eigenvalue for p in pts)
    return ConvexityRecord(float(low), len(pts))


@dataclass(frozen=True, eq=False)
class SpecialDomain:
    """``(X + iY)`` minus the fence."""

    X: ConvexDomain
    fence: CompactFence
    initial_check: MarginRecord
    convexity: ConvexityRecord

    @property
    def Y(self) -> ConvexDomain:
        return self.fence.Y

    @property
    def barrier(self) -> SpecialBarrier:
        return self.fence.barrier

    @property
    def n(self) -> int:
        return self.fence.n

    def contains(self, z):
        return special_domain_contains(self, z)

    def to_record(self):
        return {"X": self.X.to_config(), "barrier": self.barrier.to_record(),
                "initial_check": self.initial_check.to_record(), "X_convexity": self.convexity.to_record()}


def make_special_domain(X: ConvexDomain, barrier: SpecialBarrier, seeds: int = 32, seed: int = 0,
                        require: bool = True) -> SpecialDomain:
    """Check the hypotheses and build the domain.

    With ``require`` a failed check raises UnsupportedHypothesisError naming
    it; otherwise the domain is returned with the failing records attached.
    """
    if X.dim != barrier.n:
        raise DimensionError("X and the barrier live in different dimensions")
    convexity = boundary_convexity(X, seed=seed)
    if require and not isinstance(X, Ball):
        raise UnsupportedHypothesisError("strict_convexity", f"{X.kind} X has flat boundary pieces")
    if require and not convexity.strictly_convex:
        raise UnsupportedHypothesisError("strict_convexity", f"min tangential eigenvalue {convexity.min_eigenvalue:.3g}")
    if require and not barrier.usable:
        raise UnsupportedHypothesisError("special_barrier", "barrier verdict is Refuted")
    fence = CompactFence(barrier)
    check = convex_initial_check(X, fence, seeds, seed)
    if require and not check.passed:
        raise UnsupportedHypothesisError(
            "convex_initial_check", f"margin {check.margin:.6g} at x={np.asarray(check.argmin.x).tolist()}")
    return SpecialDomain(X, fence, check, convexity)


def special_domain_contains(S: SpecialDomain, z):
    p = _split(z, S.n)
    inside = S.X.interior_contains(p.x) & S.Y.interior_contains(p.y) & ~np.asarray(fence_contains(S.fence, p))
    return _scalarize(inside)


@dataclass(frozen=True, eq=False)
class TruncatedTube:
    """``(X minus hole) + iY`` with a compact convex hole inside X."""

    X: ConvexDomain
    Y: ConvexDomain
    hole: ConvexDomain

    @property
    def n(self) -> int:
        return self.X.dim

    def contains(self, z):
        p = _split(z, self.n)
        inside = self.X.interior_contains(p.x) & self.Y.interior_contains(p.y) & ~self.hole.contains(p.x)
        return _scalarize(inside)


def make_truncated_tube(X: ConvexDomain, Y: ConvexDomain, hole: ConvexDomain, samples: int = 2000,
                        seed: int = 0) -> TruncatedTube:
    if not (X.dim == Y.dim == hole.dim):
        raise DimensionError("X, Y and the hole must share a dimension")
    rng = np.random.default_rng(seed)
    pts = np.vstack([hole.sample(samples, rng), hole.boundary_sample(max(samples // 4, 16), seed)])
    outside = ~X.interior_contains(pts)
    if np.any(outside):
        bad = pts[np.argmax(outside)]
        raise PreconditionError(f"hole is not inside X (sampled point {bad.tolist()})")
    return TruncatedTube(X, Y, hole)


@dataclass
class SliceConvexity:
    min_eigenvalue: float
    boundary_points: np.ndarray
    trivially_convex: bool = False

    @property
    def strictly_convex(self) -> bool:
        return self.trivially_convex or self.min_eigenvalue > TOL.pd_threshold

    def to_record(self):
        return {"min_eigenvalue": self.min_eigenvalue, "samples": int(len(self.boundary_points)),
                "trivially_convex": self.trivially_convex, "strictly_convex": self.strictly_convex}


def _boundary_by_rays(r: RealPoly, inner, directions, max_doublings=40, bisections=80):
    pts = []
    for d in directions:
        lo, hi = 0.0, 1.0
        for _ in range(max_doublings):
            if r(inner + hi * d) > 0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise PreconditionError("slice is unbounded along a sampled ray")
        for _ in range(bisections):
            mid = 0.5 * (lo + hi)
            if r(inner + mid * d) > 0:
                hi = mid
            else:
                lo = mid
        pts.append(inner + hi * d)
    return np.array(pts)


def fence_slice_strict_convexity(K: CompactFence, y0, boundary_points=None, count: int = 64,
                                 seed: int = 0, x_box=None) -> SliceConvexity:
    """Min tangential Hessian eigenvalue of the slice ``{x : (x, y0) in fence}`` over boundary samples.

    Without explicit samples the slice is located by minimisation and its
    boundary found by bisection along rays from the minimiser. A slice with
    empty interior (a point or nothing) is reported as trivially convex.
    """
    y0 = np.asarray(y0, dtype=float)
    if not K.Y.contains(y0, tol=TOL.fence):
        raise DomainError(f"y0 = {y0.tolist()} is outside the closure of Y")
    r = K.slice_function(y0)
    n = K.n
    if boundary_points is None:
        if x_box is None:
            x_box = K.barrier.x_box or (-1.5 * np.ones(n), 1.5 * np.ones(n))
        inner, val = minimize_over(Box(*x_box), r, 16, seed=seed, batched=True)
        if val >= -TOL.fence:
            return SliceConvexity(np.inf, np.empty((0, n)), trivially_convex=True)
        boundary_points = _boundary_by_rays(r, inner, sphere_points(count, n, seed))
    boundary_points = np.atleast_2d(np.asarray(boundary_points, dtype=float))
    if len(boundary_points) == 0:
        return SliceConvexity(np.inf, boundary_points, trivially_convex=True)
    low = min(strict_convexity_at(r, p).min_tangential_eigenvalue for p in boundary_points)
    return SliceConvexity(float(low), boundary_points)
