"""Finite-dimensional Grassmann algebra arithmetic.

Elements are sparse linear combinations of monomials in anticommuting
generators p0, ..., p{N-1}.  Monomials are encoded as bitmasks over the
generator indices, kept in canonical (increasing-index) order; the sign of a
product is the parity of the transpositions needed to merge the two index
sequences.

Two coefficient rings are supported:

* ``EXACT`` -- sympy expressions.  Gaussian rationals are the common case,
  but square roots of rationals and free symbols (formal time, driving
  values) are handled exactly as well.  Zero tests are exact.
* ``FLOAT`` -- complex float64, for Monte-Carlo work.  Zero tests drop
  coefficients at or below the ring's epsilon (0 by default).

Conversion goes exact -> float only.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import sympy as sp

MAX_GENERATORS = 16

EVEN = "even"
ODD = "odd"
MIXED = "mixed"


class NotInvertible(ArithmeticError):
    """Raised when inverting an element whose body vanishes."""


@dataclass(frozen=True)
class CoefficientRing:
    """Scalar ring of the algebra: exact (sympy) or complex float64."""

    kind: str          # "exact" | "float"
    eps: float = 0.0   # float kind only: |c| <= eps is treated as zero

    def __post_init__(self):
        if self.kind not in ("exact", "float"):
            raise ValueError(f"unknown ring kind {self.kind!r}")

    def coerce(self, x):
        if self.kind == "exact":
            return sp.expand(sp.sympify(x))
        return complex(x)

    def is_zero(self, c) -> bool:
        if self.kind == "exact":
            return c == 0
        return abs(c) <= self.eps


EXACT = CoefficientRing("exact")
FLOAT = CoefficientRing("float")


def _merge_sign(m1: int, m2: int) -> int:
    """Koszul sign of psi_S * psi_T for disjoint masks, sorting S++T."""
    sign = 1
    t = m2
    while t:
        low = t & -t
        t ^= low
        higher = m1 & ~((low << 1) - 1)
        if higher.bit_count() & 1:
            sign = -sign
    return sign


class GrassmannNumber:
    """Immutable element of the Grassmann algebra on ``n`` generators."""

    __slots__ = ("n", "ring", "terms")

    def __init__(self, n: int, ring: CoefficientRing, terms=None):
        if not 0 <= n <= MAX_GENERATORS:
            raise ValueError(f"number of generators must be in [0, {MAX_GENERATORS}]")
        clean = {}
        for mask, coeff in (terms or {}).items():
            if mask >> n:
                raise ValueError(f"monomial mask {mask:#b} uses generators >= {n}")
            c = ring.coerce(coeff)
            if not ring.is_zero(c):
                clean[mask] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("GrassmannNumber is immutable")

    # -- construction -----------------------------------------------------

    @classmethod
    def scalar(cls, value, n: int = 0, ring: CoefficientRing = EXACT):
        return cls(n, ring, {0: value})

    @classmethod
    def zero(cls, n: int = 0, ring: CoefficientRing = EXACT):
        return cls(n, ring, {})

    # -- ring compatibility ----------------------------------------------

    def _join(self, other: "GrassmannNumber"):
        if self.ring.kind != other.ring.kind:
            raise ValueError("mixed coefficient rings (exact vs float)")
        ring = self.ring if self.ring.eps >= other.ring.eps else other.ring
        return max(self.n, other.n), ring

    def _as_grassmann(self, x):
        if isinstance(x, GrassmannNumber):
            return x
        return GrassmannNumber(self.n, self.ring, {0: x})

    # -- linear structure -------------------------------------------------

    def __add__(self, other):
        try:
            other = self._as_grassmann(other)
        except (TypeError, sp.SympifyError):
            return NotImplemented
        n, ring = self._join(other)
        terms = dict(self.terms)
        for mask, c in other.terms.items():
            terms[mask] = terms.get(mask, 0) + c
        return GrassmannNumber(n, ring, terms)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannNumber(self.n, self.ring, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._as_grassmann(other)
        except (TypeError, sp.SympifyError):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return self._as_grassmann(other) - self

    # -- multiplication ---------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, GrassmannNumber):
            n, ring = self._join(other)
            terms = {}
            for m1, c1 in self.terms.items():
                for m2, c2 in other.terms.items():
                    if m1 & m2:
                        continue
                    tgt = m1 ^ m2
                    terms[tgt] = terms.get(tgt, 0) + _merge_sign(m1, m2) * c1 * c2
            return GrassmannNumber(n, ring, terms)
        try:
            c = self.ring.coerce(other)
        except (TypeError, sp.SympifyError):
            return NotImplemented
        return GrassmannNumber(self.n, self.ring, {m: v * c for m, v in self.terms.items()})

    def __rmul__(self, other):
        # scalars commute with everything, so left scalar mult == right
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, GrassmannNumber):
            return self * other.inverse()
        if self.ring.kind == "exact":
            return self * (sp.S.One / sp.sympify(other))
        return self * (1.0 / complex(other))

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = GrassmannNumber.scalar(1, self.n, self.ring)
        for _ in range(k):
            out = out * self
        return out

    # -- structure --------------------------------------------------------

    def body(self):
        """Coefficient of the empty monomial."""
        if 0 in self.terms:
            return self.terms[0]
        return self.ring.coerce(0)

    def soul(self) -> "GrassmannNumber":
        return GrassmannNumber(self.n, self.ring,
                               {m: c for m, c in self.terms.items() if m})

    def body_soul_split(self):
        return self.body(), self.soul()

    def parity(self) -> str:
        has_even = any(m.bit_count() % 2 == 0 for m in self.terms)
        has_odd = any(m.bit_count() % 2 == 1 for m in self.terms)
        if has_even and has_odd:
            return MIXED
        if has_odd:
            return ODD
        return EVEN  # zero counts as even

    def even_part(self) -> "GrassmannNumber":
        return GrassmannNumber(self.n, self.ring,
                               {m: c for m, c in self.terms.items() if m.bit_count() % 2 == 0})

    def odd_part(self) -> "GrassmannNumber":
        return GrassmannNumber(self.n, self.ring,
                               {m: c for m, c in self.terms.items() if m.bit_count() % 2 == 1})

    def grade_involution(self) -> "GrassmannNumber":
        """Flip the sign of the odd part (x -> (-1)^{|x|} x gradewise)."""
        return GrassmannNumber(
            self.n, self.ring,
            {m: (-c if m.bit_count() % 2 else c) for m, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, mask: int):
        return self.terms.get(mask, self.ring.coerce(0))

    def max_abs(self) -> float:
        """Largest coefficient magnitude (float ring, or numeric exact)."""
        if not self.terms:
            return 0.0
        return max(abs(complex(c)) for c in self.terms.values())

    # -- inverse and derivative -------------------------------------------

    def inverse(self) -> "GrassmannNumber":
        b = self.body()
        if self.ring.is_zero(b) or (self.ring.kind == "float" and abs(b) <= self.ring.eps):
            raise NotInvertible("element has vanishing body")
        if self.ring.kind == "exact":
            binv = sp.S.One / b
        else:
            binv = 1.0 / b
        # terminating Neumann series: (b + s)^-1 = b^-1 sum_k (-s/b)^k
        x = self.soul() * (-binv)
        out = GrassmannNumber.scalar(1, self.n, self.ring)
        power = GrassmannNumber.scalar(1, self.n, self.ring)
        for _ in range(self.n):
            power = power * x
            if power.is_zero():
                break
            out = out + power
        return out * binv

    def derive(self, index: int) -> "GrassmannNumber":
        """Left derivative with respect to generator ``index``."""
        if index >= self.n:
            return GrassmannNumber.zero(self.n, self.ring)
        bit = 1 << index
        terms = {}
        for m, c in self.terms.items():
            if not m & bit:
                continue
            below = (m & (bit - 1)).bit_count()
            sign = -1 if below % 2 else 1
            terms[m ^ bit] = terms.get(m ^ bit, 0) + sign * c
        return GrassmannNumber(self.n, self.ring, terms)

    # -- conversion -------------------------------------------------------

    def to_float(self, subs=None, ring: CoefficientRing = FLOAT) -> "GrassmannNumber":
        """Exact -> complex float64 conversion; ``subs`` maps free symbols."""
        if self.ring.kind == "float":
            return self
        terms = {}
        for m, c in self.terms.items():
            expr = sp.sympify(c)
            if subs:
                expr = expr.subs(subs)
            terms[m] = complex(expr.evalf())
        return GrassmannNumber(self.n, ring, terms)

    # -- comparison and display -------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, GrassmannNumber):
            try:
                other = self._as_grassmann(other)
            except (TypeError, sp.SympifyError):
                return NotImplemented
        if self.ring.kind != other.ring.kind:
            return False
        if self.terms.keys() != other.terms.keys():
            return False
        for m, c in self.terms.items():
            if self.ring.kind == "exact":
                if sp.expand(c - other.terms[m]) != 0:
                    return False
            elif c != other.terms[m]:
                return False
        return True

    def isclose(self, other: "GrassmannNumber", tol: float = 1e-12) -> bool:
        masks = set(self.terms) | set(other.terms)
        for m in masks:
            a = complex(self.terms.get(m, 0))
            b = complex(other.terms.get(m, 0))
            if abs(a - b) > tol:
                return False
        return True

    def __hash__(self):
        return hash((self.n, self.ring.kind, frozenset(self.terms.items())))

    def __repr__(self):
        return f"GrassmannNumber({format_grassmann(self)!r})"

    def __str__(self):
        return format_grassmann(self)


def make_generator(index: int, n: int | None = None,
                   ring: CoefficientRing = EXACT) -> GrassmannNumber:
    """The generator psi_index; odd, squares to zero."""
    if index < 0 or index >= MAX_GENERATORS:
        raise ValueError(f"generator index {index} out of range")
    if n is None:
        n = index + 1
    if index >= n:
        raise ValueError(f"generator index {index} out of range for n={n}")
    return GrassmannNumber(n, ring, {1 << index: 1})


def mul(a: GrassmannNumber, b: GrassmannNumber) -> GrassmannNumber:
    return a * b


def inverse(a: GrassmannNumber) -> GrassmannNumber:
    return a.inverse()


def derive(a: GrassmannNumber, index: int) -> GrassmannNumber:
    return a.derive(index)


def parity(a: GrassmannNumber) -> str:
    return a.parity()


def body_soul_split(a: GrassmannNumber):
    return a.body_soul_split()


# -- textual serialization ----------------------------------------------------
#
# "3/2 + (0,1)*p0p1": coefficients are rationals, Gaussian rationals "(a,b)",
# or (escape hatch) arbitrary exact expressions in braces; monomials are
# concatenated generator names.  Bit-exact round trip for both rings.

_MONO_RE = re.compile(r"^(p\d+)+$")


def _format_coeff(c, ring: CoefficientRing) -> str:
    if ring.kind == "float":
        return f"({c.real!r},{c.imag!r})"
    c = sp.sympify(c)
    if c.is_Rational:
        return str(c)
    if not c.free_symbols:
        re_, im_ = c.as_real_imag()
        if re_.is_Rational and im_.is_Rational:
            return f"({re_},{im_})"
    return "{" + str(c) + "}"


def _parse_coeff(tok: str, ring: CoefficientRing):
    tok = tok.strip()
    if tok.startswith("{") and tok.endswith("}"):
        return sp.sympify(tok[1:-1])
    if tok.startswith("(") and tok.endswith(")"):
        re_s, im_s = tok[1:-1].split(",")
        if ring.kind == "float":
            return complex(float(re_s), float(im_s))
        return sp.Rational(re_s) + sp.I * sp.Rational(im_s)
    if ring.kind == "float":
        return complex(float(sp.Rational(tok)))
    return sp.Rational(tok)


def format_grassmann(g: GrassmannNumber) -> str:
    if not g.terms:
        return "0"
    parts = []
    for mask in sorted(g.terms, key=lambda m: (m.bit_count(), m)):
        cs = _format_coeff(g.terms[mask], g.ring)
        if mask == 0:
            parts.append(cs)
        else:
            mono = "".join(f"p{i}" for i in range(g.n) if mask >> i & 1)
            parts.append(f"{cs}*{mono}")
    return " + ".join(parts)


def parse_grassmann(s: str, n: int, ring: CoefficientRing = EXACT) -> GrassmannNumber:
    s = s.strip()
    if s == "0":
        return GrassmannNumber.zero(n, ring)
    terms = {}
    for part in s.split(" + "):
        part = part.strip()
        if "*" in part:
            cs, mono = part.rsplit("*", 1)
            if not _MONO_RE.match(mono):
                raise ValueError(f"bad monomial {mono!r}")
            mask = 0
            for idx in re.findall(r"p(\d+)", mono):
                bit = 1 << int(idx)
                if mask & bit:
                    raise ValueError(f"repeated generator in {mono!r}")
                mask |= bit
        else:
            cs, mask = part, 0
        terms[mask] = terms.get(mask, 0) + _parse_coeff(cs, ring)
    return GrassmannNumber(n, ring, terms)
