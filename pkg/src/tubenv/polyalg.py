"""Sparse multivariate polynomials over R and C.

Terms live in a dict keyed by exponent tuples. Values are immutable: every
operation returns a new polynomial. Real polynomials in ``2n`` variables use
the layout ``(x_1..x_n, y_1..y_n)`` whenever they describe functions of
``z = x + iy``.
"""
from __future__ import annotations

from math import comb
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from tubenv import _kernels

ZERO_TOL = 1e-12


class DimensionError(ValueError):
    """Point or operand dimension does not match the polynomial."""


class ComplexPoint(NamedTuple):
    """``x + iy`` stored as two real arrays; trailing axis is the coordinate."""

    x: np.ndarray
    y: np.ndarray

    @classmethod
    def of(cls, x, y) -> "ComplexPoint":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise DimensionError(f"x has shape {x.shape} but y has shape {y.shape}")
        return cls(x, y)

    @classmethod
    def from_complex(cls, z) -> "ComplexPoint":
        z = np.asarray(z, dtype=complex)
        return cls(z.real.copy(), z.imag.copy())

    def as_complex(self) -> np.ndarray:
        return np.asarray(self.x) + 1j * np.asarray(self.y)

    def stacked(self) -> np.ndarray:
        """Real coordinates ``(x, y)`` concatenated along the last axis."""
        return np.concatenate([np.asarray(self.x), np.asarray(self.y)], axis=-1)


def as_point(z) -> ComplexPoint:
    """Coerce a ComplexPoint, an ``(x, y)`` pair or a complex array."""
    if isinstance(z, ComplexPoint):
        return z
    if isinstance(z, tuple) and len(z) == 2:
        return ComplexPoint.of(*z)
    arr = np.asarray(z)
    if np.iscomplexobj(arr):
        return ComplexPoint.from_complex(arr)
    raise TypeError("expected ComplexPoint, (x, y) pair or complex array")


def _check_exponents(key, nvars):
    key = tuple(int(e) for e in key)
    if len(key) != nvars:
        raise DimensionError(f"exponent vector {key} has length {len(key)}, expected {nvars}")
    if any(e < 0 for e in key):
        raise ValueError(f"negative exponent in {key}")
    return key


def _grlex_key(key):
    return (sum(key), key)


class Poly:
    """Common machinery; use :class:`RealPoly` or :class:`ComplexPoly`."""

    __slots__ = ("nvars", "_terms", "_packed")
    _scalar = complex

    def __init__(self, nvars: int, terms: Mapping[Sequence[int], complex] | None = None):
        if int(nvars) < 1:
            raise ValueError("nvars must be positive")
        self.nvars = int(nvars)
        clean = {}
        for key, c in (terms or {}).items():
            key = _check_exponents(key, self.nvars)
            c = self._coerce(c)
            if c != 0:
                clean[key] = clean.get(key, 0) + c
        self._terms = {k: v for k, v in clean.items() if v != 0}
        self._packed = None

    @classmethod
    def _coerce(cls, c):
        return complex(c)

    # construction helpers
    @classmethod
    def constant(cls, nvars: int, c) -> "Poly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, index: int) -> "Poly":
        if not 0 <= index < nvars:
            raise IndexError(f"variable index {index} out of range for {nvars} variables")
        key = [0] * nvars
        key[index] = 1
        return cls(nvars, {tuple(key): 1})

    @classmethod
    def sum_of_squares(cls, nvars: int, indices: Iterable[int] | None = None) -> "Poly":
        indices = range(nvars) if indices is None else indices
        terms = {}
        for j in indices:
            key = [0] * nvars
            key[j] = 2
            terms[tuple(key)] = 1
        return cls(nvars, terms)

    # introspection
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def sorted_terms(self) -> list:
        """Terms in graded lexicographic order (degree, then exponent tuple)."""
        return sorted(self._terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def degree(self) -> int:
        return max((sum(k) for k in self._terms), default=0)

    def degree_in(self, indices: Iterable[int]) -> int:
        idx = list(indices)
        return max((sum(k[i] for i in idx) for k in self._terms), default=0)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self._terms.values())

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self._terms == other._terms
        if np.isscalar(other):
            return self == type(self).constant(self.nvars, other)
        return NotImplemented

    def __hash__(self):
        return hash((self.nvars, frozenset(self._terms.items())))

    def almost_equal(self, other: "Poly", tol: float = ZERO_TOL) -> bool:
        return (self - other).is_zero(tol)

    def __repr__(self):
        if not self._terms:
            return f"{type(self).__name__}({self.nvars}, 0)"
        parts = []
        for key, c in self.sorted_terms():
            mono = "*".join(f"v{j}^{e}" if e > 1 else f"v{j}" for j, e in enumerate(key) if e)
            parts.append(f"{c!r}" + (f"*{mono}" if mono else ""))
        return f"{type(self).__name__}({self.nvars}, " + " + ".join(parts) + ")"

    # arithmetic
    def _result_type(self, other):
        if isinstance(self, ComplexPoly) or isinstance(other, ComplexPoly):
            return ComplexPoly
        if isinstance(other, (complex, np.complexfloating)):
            return ComplexPoly
        return RealPoly

    def _lift(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionError(f"operands have {self.nvars} and {other.nvars} variables")
            return other
        if np.isscalar(other):
            cls = ComplexPoly if isinstance(other, (complex, np.complexfloating)) else RealPoly
            return cls.constant(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        cls = self._result_type(other)
        terms = dict(self._terms)
        for k, v in other._terms.items():
            terms[k] = terms.get(k, 0) + v
        return cls(self.nvars, terms)

    __radd__ = __add__

    def __neg__(self):
        return type(self)(self.nvars, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            cls = self._result_type(other)
            return cls(self.nvars, {k: v * other for k, v in self._terms.items()})
        other = self._lift(other)
        if other is NotImplemented:
            return other
        cls = self._result_type(other)
        terms: dict = {}
        for k1, v1 in self._terms.items():
            for k2, v2 in other._terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                terms[key] = terms.get(key, 0) + v1 * v2
        return cls(self.nvars, terms)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if not isinstance(power, (int, np.integer)) or power < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = type(self).constant(self.nvars, 1)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    # calculus and re-indexing
    def differentiate(self, var_index: int) -> "Poly":
        if not 0 <= var_index < self.nvars:
            raise IndexError(f"variable index {var_index} out of range for {self.nvars} variables")
        terms = {}
        for key, c in self._terms.items():
            e = key[var_index]
            if e:
                new = list(key)
                new[var_index] = e - 1
                terms[tuple(new)] = c * e
        return type(self)(self.nvars, terms)

    def embed(self, nvars: int, positions: Sequence[int]) -> "Poly":
        """Rewrite in ``nvars`` variables, old variable ``j`` becoming ``positions[j]``."""
        if len(positions) != self.nvars:
            raise DimensionError("positions must list one target per variable")
        terms = {}
        for key, c in self._terms.items():
            new = [0] * nvars
            for j, e in enumerate(key):
                new[positions[j]] += e
            terms[tuple(new)] = c
        return type(self)(nvars, terms)

    def restrict(self, fixed: Mapping[int, float]) -> "Poly":
        """Substitute numeric values for some variables; the rest keep their order."""
        keep = [j for j in range(self.nvars) if j not in fixed]
        if not keep:
            raise ValueError("restrict must leave at least one free variable")
        terms: dict = {}
        for key, c in self._terms.items():
            val = c
            for j, v in fixed.items():
                if key[j]:
                    val = val * v ** key[j]
            new = tuple(key[j] for j in keep)
            terms[new] = terms.get(new, 0) + val
        cls = type(self)
        if any(isinstance(v, (complex, np.complexfloating)) for v in fixed.values()):
            cls = ComplexPoly
        return cls(len(keep), terms)

    # evaluation
    def _packed_arrays(self):
        if self._packed is None:
            keys = list(self._terms)
            exps = np.array(keys, dtype=np.int64).reshape(len(keys), self.nvars)
            coeffs = np.array([self._terms[k] for k in keys], dtype=self._dtype)
            self._packed = (exps, coeffs)
        return self._packed

    def _evaluate(self, pts):
        pts = np.asarray(pts)
        if pts.shape[-1:] != (self.nvars,):
            raise DimensionError(f"point has trailing dimension {pts.shape[-1:]}, expected {self.nvars}")
        flat = pts.reshape(-1, self.nvars)
        exps, coeffs = self._packed_arrays()
        out = _kernels.poly_eval(exps, coeffs, flat)
        return out.reshape(pts.shape[:-1])

    def __call__(self, pts):
        out = self._evaluate(pts)
        return out[()] if out.ndim == 0 else out

    # serialisation
    def to_literal(self) -> list:
        rows = []
        for key, c in self.sorted_terms():
            c = complex(c)
            row = {"exponents": list(key), "coeff_re": c.real}
            if c.imag:
                row["coeff_im"] = c.imag
            rows.append(row)
        return rows

    @classmethod
    def from_literal(cls, nvars: int, rows: Iterable[Mapping]) -> "Poly":
        terms: dict = {}
        for row in rows:
            key = _check_exponents(row["exponents"], nvars)
            c = complex(float(row.get("coeff_re", 0.0)), float(row.get("coeff_im", 0.0)))
            terms[key] = terms.get(key, 0) + c
        if cls is Poly:
            cls = ComplexPoly if any(v.imag for v in terms.values()) else RealPoly
        elif cls is RealPoly and any(v.imag for v in terms.values()):
            raise ValueError("imaginary coefficient in a real polynomial literal")
        return cls(nvars, terms)


class RealPoly(Poly):
    __slots__ = ()
    _dtype = np.float64

    @classmethod
    def _coerce(cls, c):
        if isinstance(c, (complex, np.complexfloating)):
            if c.imag != 0:
                raise ValueError(f"RealPoly coefficient {c} is not real")
            c = c.real
        return float(c)


class ComplexPoly(Poly):
    __slots__ = ()
    _dtype = np.complex128

    @property
    def real_coefficients(self) -> bool:
        return all(complex(c).imag == 0 for c in self._terms.values())


def eval_real(p: Poly, x) -> float | np.ndarray:
    """Evaluate at real points; ``x`` has shape ``(..., p.nvars)``."""
    x = np.asarray(x, dtype=float)
    return p(x)


def eval_complex(P: Poly, z) -> complex | np.ndarray:
    """Evaluate at ``z = x + iy`` (ComplexPoint, ``(x, y)`` pair or complex array)."""
    z = as_point(z)
    if np.shape(z.x)[-1:] != (P.nvars,):
        raise DimensionError(f"point dimension {np.shape(z.x)[-1:]} does not match {P.nvars}")
    out = P._evaluate(z.as_complex())
    return out[()] if out.ndim == 0 else out


def differentiate(p: Poly, var_index: int) -> Poly:
    return p.differentiate(var_index)


def holomorphic_extension(alpha: RealPoly) -> ComplexPoly:
    """``F`` with the coefficients of ``alpha`` read in ``z``; ``F(x + i0) = alpha(x)``."""
    if isinstance(alpha, ComplexPoly) and not alpha.real_coefficients:
        raise ValueError("alpha must have real coefficients")
    return ComplexPoly(alpha.nvars, alpha.terms)


_I_POWERS = (1, 1j, -1, -1j)


def _expand_monomial(key):
    """``prod_j (x_j + i y_j)^{e_j}`` as ``{(a, b): integer * i^K}`` with exact ints."""
    n = len(key)
    parts = {((0,) * n, (0,) * n): (1, 0)}
    for j, e in enumerate(key):
        if not e:
            continue
        nxt: dict = {}
        for (a, b), (mult, ipow) in parts.items():
            for k in range(e + 1):
                a2 = list(a)
                b2 = list(b)
                a2[j] = e - k
                b2[j] = k
                nk = (tuple(a2), tuple(b2))
                nxt[nk] = (mult * comb(e, k), (ipow + k) % 4)
        parts = nxt
    return parts


def _split_parts(F: Poly):
    n = F.nvars
    re_terms: dict = {}
    im_terms: dict = {}
    for key, c in F.terms.items():
        c = complex(c)
        for (a, b), (mult, ipow) in _expand_monomial(key).items():
            w = c * _I_POWERS[ipow]
            full = a + b
            if w.real:
                re_terms[full] = re_terms.get(full, 0.0) + w.real * mult
            if w.imag:
                im_terms[full] = im_terms.get(full, 0.0) + w.imag * mult
    return RealPoly(2 * n, re_terms), RealPoly(2 * n, im_terms)


def real_part(F: Poly) -> RealPoly:
    """``Re F(x + iy)`` as a real polynomial in ``(x, y)``."""
    return _split_parts(F)[0]


def imag_part(F: Poly) -> RealPoly:
    """``Im F(x + iy)`` as a real polynomial in ``(x, y)``."""
    return _split_parts(F)[1]


def lift_x(p: Poly) -> Poly:
    """A polynomial in ``x`` viewed in the ``(x, y)`` layout."""
    return p.embed(2 * p.nvars, list(range(p.nvars)))


def lift_y(p: Poly) -> Poly:
    """A polynomial in ``n`` variables placed on the ``y`` block of ``(x, y)``."""
    n = p.nvars
    return p.embed(2 * n, list(range(n, 2 * n)))


def augmenting_decomposition(F: Poly) -> tuple[RealPoly, RealPoly]:
    """Split ``Re F(x+iy) = alpha(x) + f(x, y)`` with ``f(x, 0) = 0``.

    ``alpha`` is returned in the ``n`` x-variables, ``f`` in ``(x, y)``.
    """
    n = F.nvars
    re = real_part(F)
    alpha_terms = {}
    f_terms = {}
    for key, c in re.terms.items():
        if any(key[n:]):
            f_terms[key] = c
        else:
            alpha_terms[key[:n]] = c
    return RealPoly(n, alpha_terms), RealPoly(2 * n, f_terms)


def has_mixed_terms(p: Poly, n: int) -> bool:
    """True when some monomial of ``p`` (in ``(x, y)``) involves both blocks."""
    return any(any(k[:n]) and any(k[n:]) for k in p.terms)


def hessian_polys(p: Poly, indices: Sequence[int]) -> list[list[Poly]]:
    """Symbolic second derivatives ``d^2 p / dv_a dv_b`` over the listed variables."""
    first = [p.differentiate(i) for i in indices]
    return [[first[a].differentiate(j) for j in indices] for a in range(len(indices))]


def evaluate_matrix(polys: Sequence[Sequence[Poly]], pts) -> np.ndarray:
    """Evaluate a grid of polynomials on points ``(..., d)`` -> ``(..., r, c)``."""
    pts = np.asarray(pts, dtype=float)
    rows = len(polys)
    cols = len(polys[0]) if rows else 0
    out = np.empty(pts.shape[:-1] + (rows, cols))
    cache: dict = {}
    for a in range(rows):
        for b in range(cols):
            p = polys[a][b]
            key = id(p)
            if key not in cache:
                cache[key] = np.asarray(p._evaluate(pts)).real
            out[..., a, b] = cache[key]
    return out


def is_constant(p: Poly) -> bool:
    return all(not any(k) for k in p.terms)


def constant_value(p: Poly) -> complex:
    return p.terms.get((0,) * p.nvars, 0.0)
