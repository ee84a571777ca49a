"""Shared builders for the test modules."""
import numpy as np

from tubenv.barrier import build_barrier
from tubenv.domain import make_special_domain
from tubenv.hull import closed_form_hull
from tubenv.numgeom import Ball
from tubenv.polyalg import RealPoly


def ball(n, r):
    return Ball(np.zeros(n), float(r))


def const(n, c):
    return RealPoly.constant(n, c)


def linear(coeffs):
    n = len(coeffs)
    return RealPoly(n, {tuple(int(j == k) for j in range(n)): c for k, c in enumerate(coeffs)})


def x1x2(n=2):
    return RealPoly(n, {tuple([1, 1] + [0] * (n - 2)): 1.0})


def special(alpha, r2=2.0, r3=0.5, seed=0):
    n = alpha.nvars
    X, Y = ball(n, r2), ball(n, r3)
    b = build_barrier(alpha, Y, X=X)
    return make_special_domain(X, b, seed=seed)


def shell_hull(n=2, r1=1.0, r2=2.0, r3=0.5):
    return closed_form_hull(special(const(n, r1 * r1), r2, r3))
