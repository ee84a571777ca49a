"""Envelope descriptions as membership-testable sets, plus Levi-form checks and the
O(D)-convexity and hyperplane certificates that back the half-space descriptions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from tubenv.tolerances import TOL
from tubenv.domain import SpecialDomain, _scalarize
from tubenv.errors import (
    AmbiguousSideError,
    NotSeparableError,
    PreconditionError,
    SingularPointError,
    UnsupportedHypothesisError,
)
from tubenv.hull import HullDescription, SeparationCertificate, closed_form_hull
from tubenv.morse import critical_points
from tubenv.newton import HolomorphicMap, RealSystem, newton_pinv
from tubenv.numgeom import Ball, Box, ConvexDomain, sphere_points, sym_eigenvalues_batch, tangent_basis
from tubenv.polyalg import (
    ComplexPoint,
    ComplexPoly,
    DimensionError,
    RealPoly,
    as_point,
    eval_complex,
    evaluate_matrix,
    hessian_polys,
)


def _split(z, n):
    p = as_point(z)
    if np.shape(p.x)[-1:] != (n,):
        raise DimensionError(f"point dimension {np.shape(p.x)[-1:]} does not match n = {n}")
    return p


# ---------------------------------------------------------------------------
# envelope descriptions

@dataclass(frozen=True, eq=False)
class EnvelopeDescription:
    X: ConvexDomain
    Y: ConvexDomain

    kind = ""

    @property
    def n(self) -> int:
        return self.X.dim

    def in_tube(self, p: ComplexPoint) -> np.ndarray:
        return self.X.interior_contains(p.x) & self.Y.interior_contains(p.y)

    def _extra(self, p: ComplexPoint) -> np.ndarray:
        raise NotImplementedError

    def contains(self, z):
        p = _split(z, self.n)
        return _scalarize(self.in_tube(p) & self._extra(p))

    def to_record(self) -> dict:
        return {"kind": self.kind, "X": self.X.to_config(), "Y": self.Y.to_config()}


@dataclass(frozen=True, eq=False)
class SpecialDomainEnvelope(EnvelopeDescription):
    hull: HullDescription | None = None
    kind = "special_domain"

    def _extra(self, p):
        return np.asarray(self.hull.delta(p.stacked())) > 0

    def to_record(self):
        rec = super().to_record()
        rec["delta"] = self.hull.delta.to_literal()
        rec["R"] = self.hull.R
        return rec


@dataclass(frozen=True, eq=False)
class ShellEnvelope(EnvelopeDescription):
    r1: float = 0.0
    r2: float = 1.0
    r3: float = 1.0
    kind = "shell"

    def _extra(self, p):
        x2 = np.sum(np.asarray(p.x) ** 2, axis=-1)
        y2 = np.sum(np.asarray(p.y) ** 2, axis=-1)
        return y2 < x2 - (self.r1**2 - self.r3**2)

    def to_record(self):
        rec = super().to_record()
        rec.update(r1=self.r1, r2=self.r2, r3=self.r3)
        return rec


@dataclass(frozen=True, eq=False)
class LinearEnvelope(EnvelopeDescription):
    direction: np.ndarray = None
    radius_bound: float = 0.0
    kind = "linear"

    def _extra(self, p):
        x, y = np.asarray(p.x), np.asarray(p.y)
        r3 = self.Y.radius
        return np.sum(x**2, -1) - np.sum(y**2, -1) > x @ self.direction - r3**2

    def to_record(self):
        rec = super().to_record()
        rec.update(direction=self.direction.tolist(), l=self.radius_bound)
        return rec


@dataclass(frozen=True, eq=False)
class HalfSpaceEnvelope(EnvelopeDescription):
    constraints: tuple = ()
    kind = "halfspaces"

    def _extra(self, p):
        Z = p.as_complex()
        ok = np.ones(np.shape(Z)[:-1], dtype=bool)
        for F, sign in self.constraints:
            ok &= sign * np.real(F._evaluate(Z)) > 0
        return ok

    def to_record(self):
        rec = super().to_record()
        rec["constraints"] = [{"F": F.to_literal(), "sign": int(s)} for F, s in self.constraints]
        return rec


@dataclass(frozen=True, eq=False)
class RationalHullEnvelope(EnvelopeDescription):
    hull_delta: RealPoly = None
    hypotheses: dict = field(default_factory=dict)
    kind = "rational_hull"

    @property
    def flagged(self) -> bool:
        return not all(h.get("passed", False) for h in self.hypotheses.values())

    def _extra(self, p):
        return np.asarray(self.hull_delta(p.stacked())) > 0

    def to_record(self):
        rec = super().to_record()
        rec["hull_delta"] = self.hull_delta.to_literal()
        rec["hypotheses"] = self.hypotheses
        rec["flagged"] = self.flagged
        return rec


def envelope_special(S: SpecialDomain) -> SpecialDomainEnvelope:
    if not S.barrier.usable:
        raise UnsupportedHypothesisError("special_barrier", "barrier verdict is Refuted")
    if not S.initial_check.passed:
        raise UnsupportedHypothesisError("convex_initial_check", f"margin {S.initial_check.margin:.6g}")
    H = closed_form_hull(S)
    return SpecialDomainEnvelope(S.X, S.Y, H)


def envelope_shell(r1: float, r2: float, r3: float, n: int) -> ShellEnvelope:
    """``||x|| < r2, ||y|| < r3, ||y||^2 < ||x||^2 - (r1^2 - r3^2)``."""
    if not (0 <= r1 < r2) or not r3 > 0 or n < 2:
        raise PreconditionError(f"need 0 <= r1 < r2, r3 > 0, n >= 2; got r1={r1}, r2={r2}, r3={r3}, n={n}")
    zero = np.zeros(n)
    return ShellEnvelope(Ball(zero, r2), Ball(zero, r3), float(r1), float(r2), float(r3))


def envelope_linear(delta_vec, r2: float, r3: float, eps: float = 0.0) -> LinearEnvelope:
    """Envelope for the linear barrier ``alpha = <delta, x>``.

    Its fence slice is the ball centred ``delta/2`` with radius ``|delta|/2``,
    whose farthest point from the origin is at distance ``l = |delta|``.
    """
    d = np.asarray(delta_vec, dtype=float)
    n = d.size
    if n < 2 or not r3 > 0:
        raise PreconditionError("need n >= 2 and r3 > 0")
    l = float(np.linalg.norm(d))
    if not r2 > l + eps:
        raise UnsupportedHypothesisError("linear_radius", f"r2 = {r2} is not above l + eps = {l + eps}")
    zero = np.zeros(n)
    return LinearEnvelope(Ball(zero, r2), Ball(zero, r3), d, l)


def envelope_halfspaces(X: ConvexDomain, Y: ConvexDomain, F_list, hull_side_probe) -> HalfSpaceEnvelope:
    """Signs chosen so the probe (a hull point) sits on the nonpositive side of each ``sign * Re F_j``."""
    probe = _split(hull_side_probe, X.dim)
    constraints = []
    for j, F in enumerate(F_list):
        v = float(np.real(eval_complex(F, probe)))
        if abs(v) <= TOL.side:
            raise AmbiguousSideError(f"Re F_{j + 1}(probe) = {v:.3g} does not pick a side")
        constraints.append((F, -1 if v > 0 else 1))
    return HalfSpaceEnvelope(X, Y, tuple(constraints))


# ---------------------------------------------------------------------------
# Levi form

class LeviVerdict(str, enum.Enum):
    FLAT = "Flat"
    PSEUDOCONVEX = "Pseudoconvex"
    INDEFINITE = "Indefinite"


@dataclass
class LeviReport:
    points: np.ndarray
    complex_hessian_norms: np.ndarray
    max_entries: np.ndarray
    min_eigenvalues: np.ndarray
    max_eigenvalues: np.ndarray
    verdict: LeviVerdict
    sampled_forms: np.ndarray | None = None

    def to_record(self):
        return {"verdict": self.verdict.value, "samples": int(len(self.points)),
                "max_entry": float(np.max(self.max_entries, initial=0.0)),
                "min_eigenvalue": float(np.min(self.min_eigenvalues, initial=np.inf)),
                "max_eigenvalue": float(np.max(self.max_eigenvalues, initial=-np.inf)),
                "max_complex_hessian_norm": float(np.max(self.complex_hessian_norms, initial=0.0))}


def complex_hessian(rho: RealPoly, points) -> tuple[np.ndarray, np.ndarray]:
    """``(d rho/dz_j, d2 rho/dz_j dzbar_k)`` at rows ``(x, y)`` via Wirtinger derivatives."""
    n = rho.nvars // 2
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    grad = np.stack([np.real(rho.differentiate(j)._evaluate(pts)) for j in range(2 * n)], axis=-1)
    H = evaluate_matrix(hessian_polys(rho, range(2 * n)), pts)
    Hxx, Hxy = H[:, :n, :n], H[:, :n, n:]
    Hyx, Hyy = H[:, n:, :n], H[:, n:, n:]
    dz = 0.5 * (grad[:, :n] - 1j * grad[:, n:])
    L = 0.25 * (Hxx + Hyy) + 0.25j * (Hxy - Hyx)
    return dz, L


def levi_check(rho: RealPoly, points, tangent_sampling: int = 0, seed: int = 0) -> LeviReport:
    """Levi form of ``rho`` restricted to the complex tangent space at each point."""
    if rho.nvars % 2:
        raise ValueError("rho must be a polynomial in (x, y)")
    n = rho.nvars // 2
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    dz, L = complex_hessian(rho, pts)
    gnorm = np.linalg.norm(dz, axis=1)
    if np.any(gnorm <= TOL.singular):
        bad = pts[int(np.argmin(gnorm))]
        raise SingularPointError(f"gradient of rho vanishes at {bad.tolist()}")
    m = len(pts)
    restricted = np.empty((m, n - 1, n - 1), dtype=complex)
    bases = []
    for i in range(m):
        B = tangent_basis(dz[i] / gnorm[i])
        bases.append(B)
        restricted[i] = B.T @ L[i] @ B.conj()
    max_entries = np.max(np.abs(restricted), axis=(1, 2), initial=0.0)
    if n > 1:
        emb = np.block([[restricted.real, -restricted.imag], [restricted.imag, restricted.real]])
        emb = 0.5 * (emb + np.swapaxes(emb, 1, 2))
        lam = sym_eigenvalues_batch(emb)
        lo, hi = lam[:, 0], lam[:, -1]
    else:
        lo = hi = np.zeros(m)
    sampled = None
    if tangent_sampling:
        rng = np.random.default_rng(seed)
        sampled = np.empty((m, tangent_sampling))
        for i, B in enumerate(bases):
            c = rng.standard_normal((tangent_sampling, n - 1)) + 1j * rng.standard_normal((tangent_sampling, n - 1))
            c /= np.linalg.norm(c, axis=1, keepdims=True)
            w = c @ B.T
            sampled[i] = np.real(np.einsum("sj,jk,sk->s", w, L[i], w.conj()))
    if np.all(max_entries < TOL.levi_flat):
        verdict = LeviVerdict.FLAT
    elif np.all(lo >= -TOL.pseudoconvex):
        verdict = LeviVerdict.PSEUDOCONVEX
    else:
        verdict = LeviVerdict.INDEFINITE
    return LeviReport(pts, np.linalg.norm(L, axis=(1, 2)), max_entries, lo, hi, verdict, sampled)


# ---------------------------------------------------------------------------
# sampling helpers

def sample_tube(X: ConvexDomain, Y: ConvexDomain, count: int, rng) -> np.ndarray:
    """Uniform rows ``(x, y)`` in the closed tube."""
    return np.hstack([X.sample(count, rng), Y.sample(count, rng)])


def sample_level_set(rho: RealPoly, X: ConvexDomain, Y: ConvexDomain, count: int, seed: int = 0,
                     open_tube: bool = True, grad_floor: float = 1e-6) -> np.ndarray:
    """Points of ``{rho = 0}`` inside the tube found by Newton projection of tube samples.

    Points where the gradient is below ``grad_floor`` are discarded, so the
    result consists of regular points. Sampling gives up after three rounds
    without any hit, which usually means the level set misses the tube.
    """
    n = X.dim
    system = RealSystem([rho])
    rng = np.random.default_rng(seed)
    out, tries = [], 0
    while sum(len(o) for o in out) < count and tries < 20:
        if tries >= 3 and not any(len(o) for o in out):
            break
        tries += 1
        W0 = sample_tube(X, Y, 2 * count, rng)
        W, ok, _ = newton_pinv(system, W0, tol=1e-12, max_iter=60)
        inside = X.interior_contains(W[:, :n]) & Y.interior_contains(W[:, n:]) if open_tube else \
            X.contains(W[:, :n]) & Y.contains(W[:, n:])
        _, J = system(W)
        ok &= inside & (np.linalg.norm(J[:, 0], axis=1) > grad_floor)
        out.append(W[ok])
    pts = np.concatenate(out) if out else np.empty((0, 2 * n))
    return pts[:count]


def sample_common_zero_set(F_list, X: ConvexDomain, Y: ConvexDomain, count: int, seed: int = 0) -> np.ndarray:
    """Points of ``{Re F_j = 0 for all j}`` in the closed tube."""
    n = X.dim
    maps = [HolomorphicMap(F) for F in F_list]

    def system(W):
        G = np.stack([mp.values(W).real for mp in maps], axis=1)
        J = np.stack([mp.jacobian(W)[:, 0] for mp in maps], axis=1)
        return G, J

    rng = np.random.default_rng(seed)
    out, tries = [], 0
    while sum(len(o) for o in out) < count and tries < 20:
        tries += 1
        W, ok, _ = newton_pinv(system, sample_tube(X, Y, 2 * count, rng), tol=1e-12, max_iter=60)
        ok &= X.contains(W[:, :n]) & Y.contains(W[:, n:])
        out.append(W[ok])
    pts = np.concatenate(out) if out else np.empty((0, 2 * n))
    return pts[:count]


# ---------------------------------------------------------------------------
# certificates

def odbar_convexity_certificate(F_list, deltas, p, X: ConvexDomain, Y: ConvexDomain, samples=None,
                                sample_count: int = 500, seed: int = 0) -> SeparationCertificate:
    """``Phi = exp(sign_k F_k - sign_k F_k(p))`` for the constraint with the largest margin at p.

    On ``E = {Re F_j = 0 for all j}`` its modulus is exactly ``exp(-eps)``.
    """
    if len(F_list) != len(deltas) or not F_list:
        raise ValueError("need one sign per constraint")
    n = X.dim
    pt = _split(p, n)
    margins = [s * float(np.real(eval_complex(F, pt))) for F, s in zip(F_list, deltas)]
    k = int(np.argmax(margins))
    eps = margins[k]
    if eps <= TOL.separation:
        raise NotSeparableError(f"no constraint has sign * Re F(p) above {TOL.separation} (best {eps:.3g})")
    exponent = F_list[k] * deltas[k]
    shift = complex(eval_complex(exponent, pt))
    value = complex(np.exp(complex(eval_complex(exponent, pt)) - shift))
    if samples is None:
        samples = sample_common_zero_set(F_list, X, Y, sample_count, seed)
    if len(samples):
        vals = np.asarray(eval_complex(exponent, (samples[:, :n], samples[:, n:])))
        sampled = float(np.max(np.abs(np.exp(vals - shift))))
    else:
        sampled = 0.0
    return SeparationCertificate("odbar", pt, exponent, shift, value, float(np.exp(-eps)), sampled, len(samples))


@dataclass
class HyperplaneCertificate:
    point: ComplexPoint
    side: str
    normal: np.ndarray
    distance: float
    h_at_point: complex
    inf_analytic: float
    inf_sampled: float
    samples: int

    @property
    def margin(self) -> float:
        return self.inf_analytic

    @property
    def valid(self) -> bool:
        return self.margin > 0 and abs(self.h_at_point) < 1e-12 and self.inf_sampled >= self.inf_analytic - 1e-9

    def evaluate(self, z) -> np.ndarray:
        p = as_point(z)
        Z = p.as_complex()
        Z0 = self.point.as_complex()
        lin = (Z - Z0) @ self.normal if self.side == "x" else (-1j * Z + 1j * Z0) @ self.normal
        return np.exp(lin) - 1.0

    def to_record(self):
        return {"kind": "hyperplane", "side": self.side, "margin": self.margin,
                "point": {"x": np.asarray(self.point.x).tolist(), "y": np.asarray(self.point.y).tolist()},
                "function_coefficients": {"normal": self.normal.tolist(), "side": self.side},
                "h_at_point": [self.h_at_point.real, self.h_at_point.imag],
                "samples": {"count": self.samples, "inf_sampled": self.inf_sampled}}


def hyperplane_certificate(X: ConvexDomain, Y: ConvexDomain, p, samples: int = 2000, seed: int = 0) -> HyperplaneCertificate:
    """``exp(<z - p, v>) - 1`` (x side) or ``exp(<-iz + ip, v>) - 1`` (y side) for p off the closed tube."""
    n = X.dim
    pt = _split(p, n)
    x, y = np.asarray(pt.x, float), np.asarray(pt.y, float)
    if not X.contains(x):
        side, D, q = "x", X, x
    elif not Y.contains(y):
        side, D, q = "y", Y, y
    else:
        raise PreconditionError("point lies in the closed tube")
    proj = D.project(q)
    gap = q - proj
    dist = float(np.linalg.norm(gap))
    v = gap / dist
    rng = np.random.default_rng(seed)
    W = np.vstack([sample_tube(X, Y, samples, rng),
                   np.hstack([X.boundary_sample(samples // 4, seed), Y.boundary_sample(samples // 4, seed + 1)])])
    cert = HyperplaneCertificate(pt, side, v, dist, 0j, float(1.0 - np.exp(-dist)), 0.0, len(W))
    cert.h_at_point = complex(cert.evaluate(pt))
    cert.inf_sampled = float(np.min(np.abs(cert.evaluate((W[:, :n], W[:, n:])))))
    return cert


# ---------------------------------------------------------------------------
# rational-hull envelope for truncated tubes

def envelope_rational(X: ConvexDomain, Y: ConvexDomain, K_x: ConvexDomain, hull_delta: RealPoly,
                      Psi: ComplexPoly, samples: int = 200, seed: int = 0) -> RationalHullEnvelope:
    """``D`` minus the candidate rational hull ``{hull_delta <= 0}``, with hypothesis checks attached.

    Checks ``levi_flat`` (the hypersurface ``{hull_delta = 0}`` in D is
    regular and Levi-flat), ``variety_avoidance`` (level varieties of Psi
    through hull-interior points stay inside the hull) and ``contains_hole``.
    All are sampled.
    """
    n = X.dim
    if n < 3:
        raise PreconditionError("the rational-hull envelope needs n >= 3")
    if hull_delta.nvars != 2 * n or Psi.nvars != n:
        raise DimensionError("hull_delta must be in (x, y) and Psi in z, both over n variables")
    hyp = {}

    # levi_flat: regularity and Levi-flatness
    lo = np.concatenate(X.bounding_box()[:1] + Y.bounding_box()[:1])
    hi = np.concatenate(X.bounding_box()[1:] + Y.bounding_box()[1:])
    crit = critical_points(hull_delta, Box(lo, hi), seed_grid=3)
    singular = [c.location for c in crit
                if abs(float(hull_delta(c.location))) < TOL.singular
                and X.contains(c.location[:n]) and Y.contains(c.location[n:])]
    pts = sample_level_set(hull_delta, X, Y, samples, seed)
    if len(pts):
        report = levi_check(hull_delta, pts)
        flat = report.verdict is LeviVerdict.FLAT
        levi = report.to_record()
    else:
        flat, levi = False, {"verdict": "NoSamples", "samples": 0}
    hyp["levi_flat"] = {"passed": bool(flat and not singular), "levi": levi,
                        "singular_points": [s.tolist() for s in singular]}

    # variety_avoidance: level varieties through hull-interior points avoid the hull boundary
    rng = np.random.default_rng(seed + 1)
    cand = sample_tube(X, Y, 4 * samples, rng)
    interior = cand[np.asarray(hull_delta(cand)) < 0][: max(1, samples // 10)]
    psi_map = HolomorphicMap(Psi)
    worst, checked = -np.inf, 0
    for w0 in interior:
        target = complex(psi_map.values(w0[None])[0])

        def system(W, target=target):
            v = psi_map.values(W)
            return np.stack([v.real - target.real, v.imag - target.imag], axis=1), psi_map.jacobian(W)

        W, ok, _ = newton_pinv(system, sample_tube(X, Y, 16, rng), tol=1e-10, max_iter=60)
        ok &= X.contains(W[:, :n]) & Y.contains(W[:, n:])
        if np.any(ok):
            worst = max(worst, float(np.max(hull_delta(W[ok]))))
            checked += int(ok.sum())
    hyp["variety_avoidance"] = {"passed": bool(checked > 0 and worst < 0), "max_hull_delta": worst,
                                "variety_points": checked, "base_points": int(len(interior))}

    # the candidate hull must contain K = K_x + i bY
    kx = np.vstack([K_x.sample(samples, rng), K_x.boundary_sample(samples // 4, seed)])
    ky = Y.boundary_sample(len(kx), seed + 2)
    on_k = np.asarray(hull_delta(np.hstack([kx, ky])))
    hyp["contains_hole"] = {"passed": bool(np.all(on_k <= TOL.hull)), "max_hull_delta": float(np.max(on_k))}
    return RationalHullEnvelope(X, Y, hull_delta, hyp)
