import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import ball, const, linear, x1x2
from tubenv.barrier import (
    DomainError,
    barrier_from_config,
    barrier_hessian,
    build_barrier,
    certify_special,
    convex_combine,
    intersect_domains,
    merge_verdicts,
)
from tubenv.numgeom import Ball, Box, PDStatus, PDVerdict, PDWitness
from tubenv.polyalg import RealPoly, has_mixed_terms


def test_constant_barrier_is_certified():
    b = build_barrier(const(3, 1.0), ball(3, 0.5))
    assert b.f.is_zero()
    assert b.verdict.status is PDStatus.CERTIFIED_EXACT
    assert abs(b.verdict.min_eigenvalue_found - 2) < 1e-12


def test_x1x2_barrier():
    b = build_barrier(x1x2(), Ball(np.array([0.1, 0.0]), 1.0))
    assert b.f == RealPoly(4, {(0, 0, 1, 1): -1.0})
    assert b.verdict.status is PDStatus.CERTIFIED_EXACT
    np.testing.assert_allclose(np.linalg.eigvalsh(barrier_hessian(b, [0.3, -0.2], [0.1, 0.0])), [1, 3])


def test_overweighted_square_is_refuted():
    b = build_barrier(RealPoly(2, {(2, 0): 2.0}), ball(2, 1.0))
    v = b.verdict
    assert v.status is PDStatus.REFUTED and not b.usable
    assert abs(v.min_eigenvalue_found + 2) < 1e-12
    np.testing.assert_allclose(np.abs(v.witness.direction), [1, 0], atol=1e-12)


def test_cubic_refuted_near_box_edge():
    b = build_barrier(RealPoly(2, {(3, 0): 1.0}), ball(2, 1.0), x_box=([-10, -10], [10, 10]))
    v = b.verdict
    assert v.status is PDStatus.REFUTED
    assert abs(v.witness.x[0] - 10) < 1e-9
    assert abs(v.min_eigenvalue_found - (2 - 60)) < 1e-9


def test_half_norm_square_certified_with_eigenvalue_one():
    b = build_barrier(RealPoly.sum_of_squares(3) * 0.5, ball(3, 1.0))
    assert b.verdict.status is PDStatus.CERTIFIED_EXACT
    assert abs(b.verdict.min_eigenvalue_found - 1) < 1e-12


def test_quartic_gets_sampled_pass_with_box():
    alpha = RealPoly(2, {(4, 0): -0.1})
    b = build_barrier(alpha, ball(2, 0.5), X=ball(2, 1.0))
    assert b.verdict.status is PDStatus.SAMPLED_PASS
    assert b.verdict.x_box is not None and b.verdict.note


@pytest.mark.parametrize("alpha", [const(2, 3.0), linear([1.0, -2.0])], ids=["const", "linear"])
def test_hessian_is_twice_identity(alpha):
    b = build_barrier(alpha, ball(2, 1.0))
    rng = np.random.default_rng(0)
    for x in rng.normal(size=(5, 2)):
        np.testing.assert_allclose(barrier_hessian(b, x, [0.2, 0.1]), 2 * np.eye(2))


def test_diagonal_quadratic_hessian():
    beta = [0.3, 0.7]
    alpha = RealPoly(2, {(2, 0): beta[0], (0, 2): beta[1]})
    b = build_barrier(alpha, ball(2, 1.0))
    np.testing.assert_allclose(barrier_hessian(b, [1.0, 2.0], [0.0, 0.5]), np.diag([2 - 2 * v for v in beta]))


def test_hessian_rejects_y_outside_closure():
    b = build_barrier(const(2, 1.0), ball(2, 0.5))
    with pytest.raises(DomainError):
        barrier_hessian(b, [0.0, 0.0], [1.0, 0.0])


def random_alpha(rng, n, degree=4):
    terms = {}
    for _ in range(5):
        e = rng.integers(0, degree + 1, size=n)
        while e.sum() > degree:
            e[rng.choice(np.flatnonzero(e))] -= 1
        terms[tuple(int(v) for v in e)] = float(rng.integers(-4, 5)) / 8
    return RealPoly(n, terms)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**31 - 1))
def test_hessian_symmetric_and_y_independent_without_mixing(n, seed):
    rng = np.random.default_rng(seed)
    b = build_barrier(random_alpha(rng, n), ball(n, 1.0), grid_resolution=3)
    ys = ball(n, 1.0).sample(20, rng)
    x = rng.normal(size=n)
    mats = [barrier_hessian(b, x, y) for y in ys]
    for M in mats:
        assert np.allclose(M, M.T, atol=1e-12)
    if not has_mixed_terms(b.f, n):
        for M1, M2 in zip(mats[::2], mats[1::2]):
            assert np.max(np.abs(M1 - M2)) < 1e-12


def test_convex_combine_endpoints_and_midpoint():
    b1 = build_barrier(const(2, 1.0), ball(2, 1.0))
    b2 = build_barrier(x1x2(), ball(2, 0.5))
    assert convex_combine(b1, b2, 1.0).alpha == b1.alpha
    assert convex_combine(b1, b2, 0.0).alpha == b2.alpha
    mid = convex_combine(b1, b2, 0.5)
    assert mid.alpha == b1.alpha * 0.5 + b2.alpha * 0.5
    assert mid.f == b2.f * 0.5
    assert mid.usable


@pytest.mark.parametrize("t", [0, 0.25, 0.5, 0.75, 1])
def test_pd_cone_is_convex(t):
    b1 = build_barrier(RealPoly.sum_of_squares(2) * 0.5, ball(2, 1.0))
    b2 = build_barrier(x1x2(), ball(2, 1.0))
    assert convex_combine(b1, b2, t).verdict.status is PDStatus.CERTIFIED_EXACT


def test_convex_combine_validates_weights():
    b = build_barrier(const(2, 1.0), ball(2, 1.0))
    with pytest.raises(ValueError):
        convex_combine(b, b, 1.5)


def test_overlapping_balls_give_flagged_outer_approximation():
    b1 = build_barrier(const(2, 1.0), Ball(np.array([0.5, 0.0]), 1.0))
    b2 = build_barrier(const(2, 1.0), Ball(np.array([-0.5, 0.0]), 1.0))
    c = convex_combine(b1, b2, 0.5)
    assert c.flags and c.Y.outer_approximation
    assert c.Y.contains(np.zeros(2))


def test_intersect_boxes_exact():
    Y, outer = intersect_domains(Box([0, 0], [2, 2]), Box([1, -1], [3, 1]))
    assert not outer and np.allclose(Y.lo, [1, 0]) and np.allclose(Y.hi, [2, 1])


def test_merge_verdicts_refuted_dominates():
    ok = PDVerdict(PDStatus.CERTIFIED_EXACT, 2.0, None, None, 1)
    bad = PDVerdict(PDStatus.REFUTED, -1.0, PDWitness(np.zeros(2), np.zeros(2), -1.0, np.array([1.0, 0])), None, 5)
    assert merge_verdicts(ok, bad).status is PDStatus.REFUTED
    assert merge_verdicts(bad, ok).status is PDStatus.REFUTED
    assert merge_verdicts(ok, ok).samples == 2


def test_refuted_verdict_needs_witness():
    with pytest.raises(ValueError):
        PDVerdict(PDStatus.REFUTED, -1.0, None, None, 1)


def test_barrier_from_config():
    cfg = {"alpha": [{"exponents": [0, 0], "coeff_re": 1.0}], "Y": {"kind": "ball", "center": [0, 0], "radius": 0.5}}
    b = barrier_from_config(cfg)
    assert b.usable and b.n == 2
    with pytest.raises(ValueError):
        barrier_from_config({"alpha": []})


def test_certify_explicit_box_recorded():
    b = build_barrier(RealPoly(2, {(3, 0): 0.01}), ball(2, 1.0))
    v = certify_special(b, grid_resolution=5, x_box=([-1, -1], [1, 1]))
    assert v.status is PDStatus.SAMPLED_PASS
    np.testing.assert_allclose(v.x_box[0], [-1, -1])
