import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from helpers import ball, const, linear, shell_hull, special
from tubenv.envelope import (
    LeviVerdict,
    complex_hessian,
    envelope_halfspaces,
    envelope_linear,
    envelope_rational,
    envelope_shell,
    envelope_special,
    hyperplane_certificate,
    levi_check,
    odbar_convexity_certificate,
    sample_common_zero_set,
    sample_level_set,
    sample_tube,
)
from tubenv.domain import special_domain_contains
from tubenv.errors import AmbiguousSideError, NotSeparableError, PreconditionError, SingularPointError, UnsupportedHypothesisError
from tubenv.polyalg import ComplexPoint, ComplexPoly, RealPoly


def P(x, y):
    return ComplexPoint.of(x, y)


def shell_formula(W, n, r1, r2, r3):
    x2 = (W[:, :n] ** 2).sum(1)
    y2 = (W[:, n:] ** 2).sum(1)
    return (x2 < r2 * r2) & (y2 < r3 * r3) & (y2 < x2 - (r1 * r1 - r3 * r3))


def shell_F(n, r1=1.0, r3=0.5):
    return ComplexPoly.sum_of_squares(n) - (r1 * r1 - r3 * r3)


def test_special_envelope_shell_example():
    env = envelope_special(special(const(2, 1.0)))
    rng = np.random.default_rng(0)
    W = sample_tube(env.X, env.Y, 20000, rng)
    assert np.array_equal(np.asarray(env.contains((W[:, :2], W[:, 2:]))), shell_formula(W, 2, 1, 2, 0.5))


def test_special_envelope_half_norm_is_whole_tube():
    env = envelope_special(special(RealPoly.sum_of_squares(2) * 0.5))
    rng = np.random.default_rng(0)
    W = sample_tube(env.X, env.Y, 5000, rng)
    inside = env.X.interior_contains(W[:, :2]) & env.Y.interior_contains(W[:, 2:])
    assert np.array_equal(np.asarray(env.contains((W[:, :2], W[:, 2:]))), inside)


def test_envelope_contains_domain():
    S = special(linear([0.7, 0.2]))
    env = envelope_special(S)
    rng = np.random.default_rng(5)
    W = sample_tube(S.X, S.Y, 50000, rng)
    z = (W[:, :2], W[:, 2:])
    assert not np.any(special_domain_contains(S, z) & ~np.asarray(env.contains(z)))


def test_shell_examples():
    env = envelope_shell(1, 2, 0.5, 2)
    assert env.contains(P([1.0, 0], [0.3, 0]))
    assert not env.contains(P([0.8, 0], [0.3, 0]))
    env0 = envelope_shell(0, 2, 0.5, 2)
    assert env0.contains(P([0, 0], [0.1, 0]))
    with pytest.raises(PreconditionError):
        envelope_shell(2, 1, 0.5, 2)


def test_linear_examples():
    env = envelope_linear([1.0, 0.0], 2.0, 0.5)
    assert env.radius_bound == 1.0
    assert env.contains(P([1.5, 0], [0, 0]))
    with pytest.raises(UnsupportedHypothesisError):
        envelope_linear([1.0, 0.0], 1.05, 0.5, eps=0.1)


def test_linear_radius_matches_brute_force():
    # farthest point from the origin of the circle |x - d/2| = |d|/2
    for d in ([1.0, 0.0], [0.3, -0.8], [2.0, 1.5]):
        d = np.asarray(d)
        c, r = d / 2, np.linalg.norm(d) / 2
        res = minimize_scalar(lambda t: -np.linalg.norm(c + r * np.array([np.cos(t), np.sin(t)])),
                              bounds=(0, 2 * np.pi), method="bounded")
        l_brute = max(-res.fun, max(np.linalg.norm(c + r * np.array([np.cos(t), np.sin(t)]))
                                    for t in np.linspace(0, 2 * np.pi, 4001)))
        env = envelope_linear(d, 10.0, 0.5)
        assert abs(env.radius_bound - l_brute) < 1e-6


def test_linear_zero_direction_reduces_to_shell():
    lin = envelope_linear([0.0, 0.0], 2.0, 0.5)
    sh = envelope_shell(0.0, 2.0, 0.5, 2)
    rng = np.random.default_rng(0)
    W = sample_tube(lin.X, lin.Y, 5000, rng)
    z = (W[:, :2], W[:, 2:])
    assert np.array_equal(np.asarray(lin.contains(z)), np.asarray(sh.contains(z)))


def test_halfspaces_shell_agreement():
    X, Y = ball(2, 2.0), ball(2, 0.5)
    env = envelope_halfspaces(X, Y, [shell_F(2)], P([0, 0], [0, 0]))
    assert env.constraints[0][1] == 1
    rng = np.random.default_rng(1)
    W = sample_tube(X, Y, 20000, rng)
    assert np.array_equal(np.asarray(env.contains((W[:, :2], W[:, 2:]))), shell_formula(W, 2, 1, 2, 0.5))


def test_halfspaces_slab_signs():
    z1 = ComplexPoly.variable(2, 0)
    env = envelope_halfspaces(ball(2, 2.0), ball(2, 0.5), [z1, 1 - z1], P([0.5, 0], [0, 0]))
    assert [s for _, s in env.constraints] == [-1, -1]
    assert env.contains(P([1.5, 0], [0, 0])) is False  # x1 > 1 fails the first sign
    assert not env.contains(P([0.5, 0], [0, 0]))


def test_halfspaces_ambiguous_probe():
    with pytest.raises(AmbiguousSideError):
        envelope_halfspaces(ball(2, 2.0), ball(2, 0.5), [shell_F(2)], P([np.sqrt(0.75), 0], [0, 0]))


def test_complex_hessian_conversion():
    # |z1|^2 + Re(z1 zbar2) has complex Hessian [[1, 1/2], [1/2, 0]]
    rho = RealPoly(4, {(2, 0, 0, 0): 1, (0, 0, 2, 0): 1, (1, 1, 0, 0): 1, (0, 0, 1, 1): 1})
    _, L = complex_hessian(rho, np.array([[0.3, 0.1, -0.2, 0.4]]))
    np.testing.assert_allclose(L[0], [[1, 0.5], [0.5, 0]], atol=1e-14)
    # Im(z1 zbar2) = (z1 zbar2 - zbar1 z2) / 2i = y1 x2 - x1 y2
    rho = RealPoly(4, {(0, 1, 1, 0): 1, (1, 0, 0, 1): -1})
    _, L = complex_hessian(rho, np.zeros((1, 4)))
    np.testing.assert_allclose(L[0], [[0, -0.5j], [0.5j, 0]], atol=1e-14)


def test_levi_check_examples():
    H = shell_hull()
    pts = sample_level_set(H.delta, H.X, H.Y, 50, seed=0)
    assert len(pts) > 0 and levi_check(H.delta, pts).verdict is LeviVerdict.FLAT
    sphere = RealPoly.sum_of_squares(4) - 1
    pts = np.array([[1.0, 0, 0, 0], [0, 0.6, 0, 0.8]])
    rep = levi_check(sphere, pts, tangent_sampling=10)
    assert rep.verdict is LeviVerdict.PSEUDOCONVEX
    assert np.all(rep.sampled_forms > 0.1)
    with pytest.raises(SingularPointError):
        levi_check(RealPoly(4, {(2, 0, 0, 0): 1, (0, 2, 0, 0): 1, (0, 0, 2, 0): -1, (0, 0, 0, 2): -1}), np.zeros((1, 4)))


def test_levi_check_indefinite():
    # x2 + x1^2 - 3 y1^2: tangent direction e1, Levi value (1 - 3) / 2 < 0
    rep = levi_check(RealPoly(4, {(0, 1, 0, 0): 1, (2, 0, 0, 0): 1, (0, 0, 2, 0): -3}), np.zeros((1, 4)))
    assert rep.verdict is LeviVerdict.INDEFINITE


def test_odbar_certificate_examples():
    X, Y = ball(2, 2.0), ball(2, 0.5)
    F = [shell_F(2)]
    eps0 = 0.53
    p = P([np.sqrt(0.75 + eps0 + 0.16), 0], [0.4, 0])
    cert = odbar_convexity_certificate(F, [1], p, X, Y, seed=0)
    assert abs(cert.sup_analytic - np.exp(-eps0)) < 1e-12
    assert abs(cert.evaluate(p) - 1) < 1e-10
    assert cert.sup_sampled <= cert.sup_analytic + 1e-9 and cert.valid
    E = sample_common_zero_set(F, X, Y, 100, seed=1)
    assert np.max(np.abs(np.real(F[0]._evaluate(E[:, :2] + 1j * E[:, 2:])))) < 1e-9
    with pytest.raises(NotSeparableError):
        odbar_convexity_certificate(F, [1], E[0][:2] + 1j * E[0][2:], X, Y)


def test_hyperplane_certificate_examples():
    X, Y = ball(2, 1.0), ball(2, 0.5)
    cert = hyperplane_certificate(X, Y, P([2, 0], [0, 0]))
    np.testing.assert_allclose(cert.normal, [1, 0])
    assert abs(cert.margin - (1 - np.exp(-1))) < 1e-12
    assert cert.inf_sampled >= cert.margin - 1e-9 and cert.valid
    cert = hyperplane_certificate(X, Y, P([0, 0], [0, 1.0]))
    assert cert.side == "y" and cert.valid
    with pytest.raises(PreconditionError):
        hyperplane_certificate(X, Y, P([0, 0], [0, 0]))


def rational_inputs(n, r1, r3):
    hd = (RealPoly.sum_of_squares(2 * n, range(n)) - RealPoly.sum_of_squares(2 * n, range(n, 2 * n))
          - (r1 * r1 - r3 * r3))
    return hd, ComplexPoly.sum_of_squares(n)


def test_rational_envelope_shell_instance():
    hd, psi = rational_inputs(3, 1.0, 0.5)
    env = envelope_rational(ball(3, 2.0), ball(3, 0.5), ball(3, 1.0), hd, psi)
    assert not env.flagged, env.hypotheses
    rng = np.random.default_rng(2)
    W = sample_tube(env.X, env.Y, 20000, rng)
    assert np.array_equal(np.asarray(env.contains((W[:, :3], W[:, 3:]))), shell_formula(W, 3, 1, 2, 0.5))


def test_rational_envelope_flags_equal_radii():
    hd, psi = rational_inputs(3, 0.5, 0.5)
    env = envelope_rational(ball(3, 2.0), ball(3, 0.5), ball(3, 0.5), hd, psi)
    assert env.flagged and not env.hypotheses["levi_flat"]["passed"]
    assert np.allclose(env.hypotheses["levi_flat"]["singular_points"][0], 0, atol=1e-6)


def test_rational_envelope_needs_three_dimensions():
    hd, psi = rational_inputs(2, 1.0, 0.5)
    with pytest.raises(PreconditionError):
        envelope_rational(ball(2, 2.0), ball(2, 0.5), ball(2, 1.0), hd, psi)
