import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import ball, const, x1x2
from tubenv.barrier import build_barrier
from tubenv.errors import PreconditionError
from tubenv.morse import (
    block_identities_check,
    block_sum_polys,
    critical_points,
    level_function,
    pluriharmonic_residual,
    pluriharmonic_residual_symbolic,
)
from tubenv.numgeom import Box
from tubenv.polyalg import ComplexPoly, RealPoly, holomorphic_extension


def barrier(alpha, r=1.0):
    return build_barrier(alpha, ball(alpha.nvars, r))


def half_norm(n=2):
    return RealPoly.sum_of_squares(n) * 0.5


def box(d, h=2.0):
    return Box(-h * np.ones(d), h * np.ones(d))


def test_level_function_examples():
    assert level_function(barrier(const(2, 1.0)), "sigma") == RealPoly.sum_of_squares(4, range(2)) - 1
    mu = level_function(barrier(half_norm()), "mu")
    assert mu == RealPoly(4, {(2, 0, 0, 0): 0.5, (0, 2, 0, 0): 0.5, (0, 0, 2, 0): -0.5, (0, 0, 0, 2): -0.5})
    mu = level_function(barrier(x1x2()), "mu")
    want = (RealPoly.sum_of_squares(4, range(2)) - RealPoly.sum_of_squares(4, range(2, 4))
            - RealPoly(4, {(1, 1, 0, 0): 1}) + RealPoly(4, {(0, 0, 1, 1): 1}))
    assert mu == want


def test_critical_point_of_half_norm_mu():
    found = critical_points(level_function(barrier(half_norm()), "mu"), box(4))
    assert len(found) == 1 and not found.continuum
    c = found[0]
    np.testing.assert_allclose(c.location, 0, atol=1e-12)
    np.testing.assert_allclose(c.A, np.eye(2))
    np.testing.assert_allclose(c.D, -np.eye(2))
    assert abs(c.det - 1) < 1e-12 and c.index == 2 and c.nondegenerate


def test_sigma_of_constant_barrier_is_a_continuum():
    found = critical_points(level_function(barrier(const(2, 1.0)), "sigma"), box(4))
    assert found.continuum
    assert all(np.allclose(c.location[:2], 0, atol=1e-9) for c in found)


def test_linear_polynomial_has_no_critical_points():
    assert len(critical_points(RealPoly.variable(2, 0), box(2))) == 0


def test_nondegenerate_points_survive_tighter_newton():
    p = level_function(barrier(x1x2()), "mu")
    first = critical_points(p, box(4))
    again = critical_points(p, box(4), tol=5e-11)
    for c in first:
        if c.nondegenerate:
            assert abs(c.det) > 1e-9 and c.gradient_norm < 1e-9
            assert any(np.linalg.norm(c.location - d.location) < 1e-6 for d in again)


def test_block_identities_examples():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, size=(10, 4))
    rep = block_identities_check(barrier(half_norm()), pts, "mu")
    assert rep.passed
    assert all(abs(r.det - 1) < 1e-12 for r in rep.rows)
    rep = block_identities_check(barrier(x1x2()), pts, "mu")
    assert rep.passed and all(abs(r.det - 9) < 1e-10 for r in rep.rows)


def test_block_identities_for_sigma_report_d_plus_a():
    alpha = x1x2() + RealPoly(2, {(2, 0): 0.25})
    rep = block_identities_check(barrier(alpha), np.zeros((1, 4)), "sigma")
    assert rep.passed  # only B = C = 0 is asserted
    # D = 2I - A, so D + A = 2I rather than 0
    assert abs(rep.rows[0].max_d_plus_a - 2) < 1e-12


def test_block_identities_reject_mixed_terms():
    b = barrier(RealPoly(2, {(2, 1): 0.1}))
    with pytest.raises(PreconditionError):
        block_identities_check(b, np.zeros((1, 4)))


def test_block_sum_is_symbolically_zero_for_mu():
    for alpha in (half_norm(), x1x2(), RealPoly(2, {(4, 0): 0.1, (0, 3): -0.2})):
        assert all(q.is_zero() for row in block_sum_polys(barrier(alpha)) for q in row)


def test_pluriharmonic_examples():
    pts = np.random.default_rng(0).normal(size=(10, 4))
    assert pluriharmonic_residual(ComplexPoly(1, {(2,): 1}), pts[:, :2]) == 0
    assert pluriharmonic_residual(ComplexPoly(2, {(3, 1): 1}), pts) == 0
    assert pluriharmonic_residual_symbolic(ComplexPoly(2, {(3, 1): 1}))
    assert abs(pluriharmonic_residual(RealPoly.sum_of_squares(4, range(2)), pts) - 2) < 1e-12
    assert not pluriharmonic_residual_symbolic(RealPoly.sum_of_squares(4, range(2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 2**31 - 1))
def test_extensions_are_pluriharmonic(n, degree, seed):
    rng = np.random.default_rng(seed)
    terms = {}
    for _ in range(5):
        e = rng.integers(0, degree + 1, size=n)
        while e.sum() > degree:
            e[rng.choice(np.flatnonzero(e))] -= 1
        terms[tuple(int(v) for v in e)] = float(rng.integers(-8, 9)) / 8
    assert pluriharmonic_residual_symbolic(holomorphic_extension(RealPoly(n, terms)))
