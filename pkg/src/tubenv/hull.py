"""Closed-form polynomial hull of the boundary fence and the certificates that cross-check it.

With ``Y = B_R(0)`` the hull of ``K_bd = fence & (X + i bY)`` is the sublevel set
``{delta <= 0}`` of ``delta = ||x||^2 - ||y||^2 - (alpha + f) + R^2`` inside the
closed tube. ``Psi = sum z_j^2 - F_alpha`` has ``Re Psi = delta - R^2``, which gives
both the separating functions ``exp(Psi)`` and the level varieties ``{Psi = const}``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from tubenv.tolerances import TOL
from tubenv.domain import SpecialDomain, _scalarize, _split, fence_contains
from tubenv.errors import NotSeparableError, PreconditionError, UnsupportedHypothesisError
from tubenv.newton import HolomorphicMap, newton_pinv
from tubenv.numgeom import Ball, ConvexDomain, sphere_points
from tubenv.polyalg import ComplexPoint, ComplexPoly, RealPoly, eval_complex

TRACE_TOL = 1e-8


def on_boundary(D: ConvexDomain, pts, tol: float | None = None):
    """Within ``tol`` of ``bD`` (inside the slack closure, outside the shrunk set)."""
    tol = TOL.boundary if tol is None else tol
    if isinstance(D, Ball):
        return np.abs(np.linalg.norm(np.asarray(pts) - D.center, axis=-1) - D.radius) <= tol
    return D.contains(pts, tol=tol) & ~D.contains(pts, tol=-tol)


def boundary_fence_contains(S: SpecialDomain, z):
    """Membership in ``fence & (X + i bY)``."""
    p = _split(z, S.n)
    inside = np.asarray(fence_contains(S.fence, p)) & S.X.contains(p.x, tol=TOL.boundary) & on_boundary(S.Y, p.y)
    return _scalarize(inside)


@dataclass(frozen=True, eq=False)
class HullDescription:
    delta: RealPoly
    X: ConvexDomain
    Y: Ball
    R: float
    psi: ComplexPoly
    domain: SpecialDomain
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.X.dim

    def to_record(self):
        return {"delta": self.delta.to_literal(), "R": self.R, "X": self.X.to_config(),
                "Y": self.Y.to_config(), "psi": self.psi.to_literal()}


def closed_form_hull(S: SpecialDomain) -> HullDescription:
    Y = S.Y
    if not (isinstance(Y, Ball) and Y.origin_centered):
        raise UnsupportedHypothesisError("origin_ball_Y", f"Y must be an origin-centred ball, got {Y.kind}")
    if not S.initial_check.passed:
        raise UnsupportedHypothesisError("convex_initial_check", f"margin {S.initial_check.margin:.6g}")
    n, R = S.n, Y.radius
    delta = S.barrier.sigma - RealPoly.sum_of_squares(2 * n, range(n, 2 * n)) + R * R
    psi = ComplexPoly.sum_of_squares(n) - S.barrier.F_alpha
    return HullDescription(delta, S.X, Y, R, psi, S)


def hull_contains(H: HullDescription, z):
    p = _split(z, H.n)
    inside = (np.asarray(H.delta(p.stacked())) <= TOL.hull) & H.X.contains(p.x) & H.Y.contains(p.y)
    return _scalarize(inside)


# ---------------------------------------------------------------------------
# separation certificates

def sample_boundary_fence(H: HullDescription, count: int = 2000, seed: int = 0) -> np.ndarray:
    """Points of ``fence & (X + i bY)`` as rows ``(x, y)``, biased to the fence boundary.

    Half are uniform rejection samples; the rest are pushed onto
    ``{sigma = 0}`` by bisection toward an outside point, where the
    separating functions come closest to their analytic bound.
    """
    key = ("kbd", count, seed)
    if key in H._cache:
        return H._cache[key]
    n, sigma = H.n, H.domain.barrier.sigma
    rng = np.random.default_rng(seed)
    kept, got, tries = [], 0, 0
    while got < count and tries < 50:
        tries += 1
        x = H.X.sample(4 * count, rng)
        y = H.R * sphere_points(4 * count, n, seed + tries)
        W = np.hstack([x, y])
        s = sigma(W)
        inner, outer = W[s <= 0], W[s > 0]
        if len(inner) == 0:
            continue
        half = inner[: max(1, count // 2)]
        kept.append(half)
        if len(outer):
            # same y on both ends keeps the segment on bY
            m = min(len(inner), len(outer))
            a, b = inner[:m].copy(), np.hstack([outer[:m, :n], inner[:m, n:]])
            sb = sigma(b)
            use = sb > 0
            a, b = a[use], b[use]
            for _ in range(60):
                mid = 0.5 * (a + b)
                neg = sigma(mid) <= 0
                a[neg], b[~neg] = mid[neg], mid[~neg]
            kept.append(a)
        got = sum(len(k) for k in kept)
    if not kept:
        out = np.empty((0, 2 * n))
    else:
        out = np.concatenate(kept)[:count]
    H._cache[key] = out
    return out


@dataclass
class SeparationCertificate:
    kind: str
    point: ComplexPoint
    exponent: ComplexPoly
    exponent_shift: complex
    value_at_point: complex
    sup_analytic: float
    sup_sampled: float
    samples: int

    @property
    def margin(self) -> float:
        return 1.0 - self.sup_analytic

    @property
    def valid(self) -> bool:
        return self.margin > 0 and self.sup_sampled <= self.sup_analytic + 1e-9

    def evaluate(self, z) -> np.ndarray:
        """``Phi(w) = exp(exponent(w) - shift)``."""
        return np.exp(np.asarray(eval_complex(self.exponent, z)) - self.exponent_shift)

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "point": {"x": np.asarray(self.point.x).tolist(), "y": np.asarray(self.point.y).tolist()},
            "margin": self.margin,
            "function_coefficients": {
                "exponent": self.exponent.to_literal(),
                "shift": [self.exponent_shift.real, self.exponent_shift.imag],
            },
            "value_at_point": [self.value_at_point.real, self.value_at_point.imag],
            "sup_analytic": self.sup_analytic,
            "samples": {"count": self.samples, "sup_sampled": self.sup_sampled},
        }


def separation_certificate(H: HullDescription, z, samples=None, sample_count: int = 2000,
                           seed: int = 0) -> SeparationCertificate:
    """``Phi(w) = exp(Psi(w) - Psi(z))``: modulus 1 at z, at most ``exp(-delta(z))`` on the boundary fence."""
    p = _split(z, H.n)
    pz = p.stacked()
    if not (H.X.contains(p.x) and H.Y.contains(p.y)):
        raise PreconditionError("point is outside the closed tube")
    dz = float(H.delta(pz))
    if dz <= TOL.separation:
        raise NotSeparableError(f"delta(z) = {dz:.3g} is not above {TOL.separation}")
    shift = complex(eval_complex(H.psi, p))
    if samples is None:
        samples = sample_boundary_fence(H, sample_count, seed)
    n = H.n
    vals = np.asarray(eval_complex(H.psi, (samples[:, :n], samples[:, n:]))) if len(samples) else np.empty(0)
    sampled = float(np.max(np.exp(vals.real - shift.real))) if len(vals) else 0.0
    value = complex(np.exp(complex(eval_complex(H.psi, p)) - shift))
    return SeparationCertificate("separation", p, H.psi, shift, value, float(np.exp(-dz)), sampled, len(samples))


# ---------------------------------------------------------------------------
# variety witnesses

class WitnessStatus(str, enum.Enum):
    VALID = "VALID"
    INVALID = "INVALID"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class VarietyWitness:
    point: ComplexPoint
    s: float
    t: float
    trace_points: np.ndarray
    residuals: np.ndarray
    in_fence: np.ndarray
    status: WitnessStatus
    seeds_used: int

    def to_record(self):
        return {"kind": "variety", "status": self.status.value, "s": self.s, "t": self.t,
                "point": {"x": np.asarray(self.point.x).tolist(), "y": np.asarray(self.point.y).tolist()},
                "trace_points": self.trace_points.tolist(), "residuals": self.residuals.tolist(),
                "in_fence": self.in_fence.tolist(), "seeds_used": self.seeds_used}


def _trace_system(psi_map: HolomorphicMap, target: complex, R: float, n: int):
    def system(W):
        v = psi_map.values(W)
        G = np.stack([v.real - target.real, v.imag - target.imag,
                      np.sum(W[:, n:] ** 2, axis=1) - R * R], axis=1)
        J = np.zeros((len(W), 3, 2 * n))
        J[:, :2] = psi_map.jacobian(W)
        J[:, 2, n:] = 2.0 * W[:, n:]
        return G, J
    return system


def variety_witness(H: HullDescription, z, k: int = 4, seed_budget: int = 200, seed: int = 0,
                    tol: float | None = None, max_iter: int = 100, batch: int = 50) -> VarietyWitness:
    """Trace points of ``{Psi = Psi(z)}`` on ``X + i bY`` and whether they all lie in the fence."""
    p = _split(z, H.n)
    n, R = H.n, H.R
    if not hull_contains(H, p):
        raise PreconditionError("point is not in the hull")
    if not (H.X.interior_contains(p.x) and np.linalg.norm(p.y) < R):
        raise PreconditionError("point must lie strictly inside the tube")
    target = complex(eval_complex(H.psi, p))
    system = _trace_system(HolomorphicMap(H.psi), target, R, n)
    rng = np.random.default_rng(seed)
    found, used = [], 0
    while used < seed_budget and len(found) < k:
        m = min(batch, seed_budget - used)
        W0 = np.hstack([H.X.sample(m, rng), R * sphere_points(m, n, seed + used)])
        W, ok, _ = newton_pinv(system, W0, tol=TOL.newton if tol is None else tol, max_iter=max_iter)
        used += m
        ok &= H.X.interior_contains(W[:, :n])
        found.extend(W[ok])
    used_points = np.array(found[:k]) if found else np.empty((0, 2 * n))
    if len(used_points) == 0:
        return VarietyWitness(p, target.real, target.imag, used_points, np.empty(0), np.empty(0, bool),
                              WitnessStatus.INCONCLUSIVE, used)
    G, _ = system(used_points)
    residuals = np.linalg.norm(G, axis=1)
    in_fence = np.asarray(boundary_fence_contains(H.domain, (used_points[:, :n], used_points[:, n:])))
    status = WitnessStatus.VALID if np.all(in_fence) else WitnessStatus.INVALID
    return VarietyWitness(p, target.real, target.imag, used_points, residuals, in_fence, status, used)


# ---------------------------------------------------------------------------
# rational hull equals polynomial hull for the spherical hole

@dataclass
class MaxPrincipleWitness:
    point: ComplexPoint
    epsilon: float
    phi_at_point: complex
    boundary_points: np.ndarray
    boundary_moduli: np.ndarray
    level: float

    @property
    def expected_modulus(self) -> float:
        return float(np.exp(-self.epsilon))

    @property
    def valid(self) -> bool:
        return (abs(abs(self.phi_at_point) - 1.0) < 1e-9 and len(self.boundary_moduli) > 0
                and bool(np.all(np.abs(self.boundary_moduli - self.expected_modulus) < 1e-6))
                and self.expected_modulus < 1.0)

    def to_record(self):
        return {"kind": "maxprinciple", "epsilon": self.epsilon, "valid": self.valid,
                "margin": 1.0 - self.expected_modulus,
                "point": {"x": np.asarray(self.point.x).tolist(), "y": np.asarray(self.point.y).tolist()},
                "phi_at_point": [self.phi_at_point.real, self.phi_at_point.imag],
                "function_coefficients": {"log_numerator": self.level - self.epsilon, "exponent": "-sum z_j^2"},
                "samples": {"boundary_points": self.boundary_points.tolist(),
                            "moduli": self.boundary_moduli.tolist()}}


def _phi(level_minus_eps: float, Z) -> np.ndarray:
    return np.exp(level_minus_eps - np.sum(np.asarray(Z) ** 2, axis=-1))


def rational_equals_polynomial_witness(r1: float, r3: float, n: int, z0, samples: int = 8, seed: int = 0,
                                       max_tries: int = 20) -> MaxPrincipleWitness:
    """Maximum-principle witness for a point of ``N = {||y|| <= r3, ||x||^2 - ||y||^2 < r1^2 - r3^2}``.

    ``phi(z) = exp(c - eps) / exp(sum z_j^2)`` with ``c = r1^2 - r3^2`` has modulus 1
    at z0 and ``exp(-eps)`` on ``E = {||x||^2 - ||y||^2 = c}``. Boundary points
    are found where zero sets of random complex linear polynomials through
    z0 meet E with ``||y|| <= r3``.
    """
    p = _split(z0, n)
    x0, y0 = np.asarray(p.x, float), np.asarray(p.y, float)
    level = r1 * r1 - r3 * r3
    gap = level - (x0 @ x0 - y0 @ y0)
    if not (gap > TOL.boundary and np.linalg.norm(y0) <= r3):
        raise PreconditionError(f"z0 is outside N (level gap {gap:.3g}, |y0| = {np.linalg.norm(y0):.3g})")
    eps = float(gap)
    Z0 = x0 + 1j * y0
    phi0 = complex(_phi(level - eps, Z0))
    rng = np.random.default_rng(seed)
    pts = []
    for attempt in range(max_tries):
        if len(pts) >= samples:
            break
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a /= np.linalg.norm(a)

        def system(W, a=a):
            Zw = W[:, :n] + 1j * W[:, n:]
            lin = (Zw - Z0) @ a
            G = np.stack([lin.real, lin.imag,
                          np.sum(W[:, :n] ** 2, 1) - np.sum(W[:, n:] ** 2, 1) - level], axis=1)
            J = np.empty((len(W), 3, 2 * n))
            J[:, 0, :n], J[:, 0, n:] = a.real, -a.imag
            J[:, 1, :n], J[:, 1, n:] = a.imag, a.real
            J[:, 2, :n], J[:, 2, n:] = 2 * W[:, :n], -2 * W[:, n:]
            return G, J

        # starts on the zero set, pushed outward in x
        m = 16
        dirs = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        dirs -= np.outer(dirs @ a, a.conj())
        dirs *= (np.sqrt(level + r3 * r3) + 0.5) / np.linalg.norm(dirs, axis=1, keepdims=True)
        starts = Z0 + dirs
        W0 = np.hstack([starts.real, starts.imag])
        W, ok, _ = newton_pinv(system, W0, tol=1e-12, max_iter=100)
        ok &= np.linalg.norm(W[:, n:], axis=1) <= r3 + 1e-12
        pts.extend(W[ok])
    pts = np.array(pts[:samples]) if pts else np.empty((0, 2 * n))
    moduli = np.abs(_phi(level - eps, pts[:, :n] + 1j * pts[:, n:])) if len(pts) else np.empty(0)
    return MaxPrincipleWitness(p, eps, phi0, pts, moduli, level)
