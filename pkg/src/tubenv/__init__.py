"""Hulls, envelopes of holomorphy and their certificates for special domains and truncated tubes."""
from tubenv.barrier import SpecialBarrier, build_barrier, certify_special, convex_combine
from tubenv.domain import (
    CompactFence,
    SpecialDomain,
    TruncatedTube,
    fence_contains,
    make_special_domain,
    make_truncated_tube,
    special_domain_contains,
)
from tubenv.envelope import (
    envelope_halfspaces,
    envelope_linear,
    envelope_rational,
    envelope_shell,
    envelope_special,
    hyperplane_certificate,
    levi_check,
    odbar_convexity_certificate,
)
from tubenv.errors import PreconditionError, UnsupportedHypothesisError
from tubenv.hull import (
    closed_form_hull,
    hull_contains,
    rational_equals_polynomial_witness,
    separation_certificate,
    variety_witness,
)
from tubenv.numgeom import Ball, Box, Polytope
from tubenv.polyalg import ComplexPoint, ComplexPoly, RealPoly
from tubenv.tolerances import TOL

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
