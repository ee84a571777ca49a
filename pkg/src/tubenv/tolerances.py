"""Numerical tolerances, read at call time so a run can override them."""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass, fields, replace


@dataclass
class Tolerances:
    pd_threshold: float = 1e-9      # "positive definite" means min eigenvalue above this
    symmetry: float = 1e-12
    fence: float = 1e-12            # slack in ||x||^2 <= alpha + f
    initial_margin: float = 1e-9    # convex-initial-domain margin must exceed this
    hull: float = 1e-12             # delta <= hull counts as in the hull
    separation: float = 1e-9        # separation certificates need delta above this
    boundary: float = 1e-9          # ||y|| = R within this
    side: float = 1e-12             # |Re F(probe)| at or below this is ambiguous
    levi_flat: float = 1e-6
    pseudoconvex: float = 1e-6
    singular: float = 1e-9          # gradient norm at or below this is singular
    degeneracy: float = 1e-9        # |det Hess| at or below this is degenerate
    dedup: float = 1e-6
    newton: float = 1e-10


TOL = Tolerances()


def keys() -> list[str]:
    return [f.name for f in fields(Tolerances)]


def parse_overrides(items) -> dict:
    """``["fence=1e-10", ...]`` to a validated dict."""
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in keys():
            raise ValueError(f"unknown tolerance override {item!r}; known keys: {', '.join(keys())}")
        value = float(val)
        if not value > 0:
            raise ValueError(f"tolerance {key} must be positive")
        out[key] = value
    return out


@contextmanager
def overridden(**values):
    """Temporarily replace some tolerances."""
    saved = replace(TOL)
    for k, v in values.items():
        if k not in keys():
            raise ValueError(f"unknown tolerance {k!r}")
        setattr(TOL, k, float(v))
    try:
        yield TOL
    finally:
        for f in fields(Tolerances):
            setattr(TOL, f.name, getattr(saved, f.name))
