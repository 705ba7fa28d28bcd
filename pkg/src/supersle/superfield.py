"""Superspace coordinates and Laurent superfunctions.

A superfunction F(z, theta) = a(z) + theta*b(z) is stored through the sparse
Laurent coefficients of its two components; theta is a formal odd symbol kept
to the *left* of b(z).  Coefficients are Grassmann numbers, so moving theta
through a coefficient x costs the grade involution: x*theta = theta*inv(x).

The superderivative is D = d/dtheta + theta d/dz (left-derivative
convention), and a map (z', theta') is superconformal iff Dz' = theta' Dtheta'.
"""
from __future__ import annotations

from dataclasses import dataclass

from supersle.grassmann import (
    EVEN,
    EXACT,
    ODD,
    CoefficientRing,
    GrassmannNumber,
    format_grassmann,
    parse_grassmann,
)


class ParityError(ValueError):
    """A component has the wrong Grassmann parity."""


@dataclass(frozen=True)
class SuperPoint:
    """A point (z, theta) with z even and theta odd (zero allowed)."""

    z: GrassmannNumber
    theta: GrassmannNumber

    def __post_init__(self):
        if self.z.parity() != EVEN:
            raise ParityError("z component must be even")
        if not self.theta.is_zero() and self.theta.parity() != ODD:
            raise ParityError("theta component must be odd")


def _poly_add(p, q):
    out = dict(p)
    for k, v in q.items():
        out[k] = out[k] + v if k in out else v
    return _poly_clean(out)


def _poly_clean(p):
    return {k: v for k, v in p.items() if not v.is_zero()}


def _poly_neg(p):
    return {k: -v for k, v in p.items()}


def _poly_mul(p, q):
    out = {}
    for k1, v1 in p.items():
        for k2, v2 in q.items():
            k = k1 + k2
            prod = v1 * v2
            out[k] = out[k] + prod if k in out else prod
    return _poly_clean(out)


def _poly_dz(p):
    return _poly_clean({k - 1: v * k for k, v in p.items() if k != 0})


def _poly_map(p, f):
    return _poly_clean({k: f(v) for k, v in p.items()})


class LaurentSuperfunction:
    """F(z, theta) = a(z) + theta*b(z) with sparse Laurent components."""

    __slots__ = ("a", "b")

    def __init__(self, a=None, b=None):
        object.__setattr__(self, "a", _poly_clean(dict(a or {})))
        object.__setattr__(self, "b", _poly_clean(dict(b or {})))

    def __setattr__(self, name, value):
        raise AttributeError("LaurentSuperfunction is immutable")

    # -- linear structure -------------------------------------------------

    def __add__(self, other):
        return LaurentSuperfunction(_poly_add(self.a, other.a),
                                    _poly_add(self.b, other.b))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return LaurentSuperfunction(_poly_neg(self.a), _poly_neg(self.b))

    # -- products ---------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, LaurentSuperfunction):
            # (a1 + th b1)(a2 + th b2) = a1 a2 + th (inv(a1) b2 + b1 a2)
            a = _poly_mul(self.a, other.a)
            b = _poly_add(
                _poly_mul(_poly_map(self.a, lambda x: x.grade_involution()), other.b),
                _poly_mul(self.b, other.a))
            return LaurentSuperfunction(a, b)
        # right multiplication by a scalar-like factor
        return LaurentSuperfunction(_poly_map(self.a, lambda x: x * other),
                                    _poly_map(self.b, lambda x: x * other))

    def lmul(self, g) -> "LaurentSuperfunction":
        """Left multiplication by a Grassmann (or plain) scalar g."""
        if not isinstance(g, GrassmannNumber):
            return self * g
        gi = g.grade_involution()
        return LaurentSuperfunction(_poly_map(self.a, lambda x: g * x),
                                    _poly_map(self.b, lambda x: gi * x))

    def __rmul__(self, other):
        return self.lmul(other)

    # -- calculus ---------------------------------------------------------

    def z_derivative(self) -> "LaurentSuperfunction":
        return LaurentSuperfunction(_poly_dz(self.a), _poly_dz(self.b))

    def theta_derivative(self) -> "LaurentSuperfunction":
        """Left derivative d/dtheta: (a + th b) -> b."""
        return LaurentSuperfunction(self.b, {})

    def superderivative(self) -> "LaurentSuperfunction":
        """D F = b(z) + theta a'(z)."""
        return LaurentSuperfunction(self.b, _poly_dz(self.a))

    # -- evaluation -------------------------------------------------------

    def eval(self, p: SuperPoint) -> GrassmannNumber:
        exps = set(self.a) | set(self.b)
        if not exps:
            return GrassmannNumber.zero(p.z.n, p.z.ring)
        powers = {0: GrassmannNumber.scalar(1, p.z.n, p.z.ring)}
        lo, hi = min(exps), max(exps)
        zinv = p.z.inverse() if lo < 0 else None
        for k in range(1, hi + 1):
            powers[k] = powers[k - 1] * p.z
        for k in range(-1, lo - 1, -1):
            powers[k] = powers[k + 1] * zinv
        out = GrassmannNumber.zero(p.z.n, p.z.ring)
        for k, c in self.a.items():
            out = out + c * powers[k]
        bval = GrassmannNumber.zero(p.z.n, p.z.ring)
        for k, c in self.b.items():
            bval = bval + c * powers[k]
        return out + p.theta * bval

    # -- predicates -------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.a and not self.b

    def max_abs(self) -> float:
        vals = [v.max_abs() for v in self.a.values()] + \
               [v.max_abs() for v in self.b.values()]
        return max(vals, default=0.0)

    def __eq__(self, other):
        if not isinstance(other, LaurentSuperfunction):
            return NotImplemented
        return (self - other).is_zero()

    def __repr__(self):
        fmt = lambda p: {k: format_grassmann(v) for k, v in sorted(p.items())}
        return f"LaurentSuperfunction(a={fmt(self.a)}, b={fmt(self.b)})"

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        return {"a": {str(k): format_grassmann(v) for k, v in self.a.items()},
                "b": {str(k): format_grassmann(v) for k, v in self.b.items()}}

    @classmethod
    def from_json(cls, data: dict, n: int,
                  ring: CoefficientRing = EXACT) -> "LaurentSuperfunction":
        return cls({int(k): parse_grassmann(v, n, ring) for k, v in data.get("a", {}).items()},
                   {int(k): parse_grassmann(v, n, ring) for k, v in data.get("b", {}).items()})


def constant(g: GrassmannNumber) -> LaurentSuperfunction:
    return LaurentSuperfunction({0: g}, {})


def z_power(k: int, n: int = 0, ring: CoefficientRing = EXACT) -> LaurentSuperfunction:
    return LaurentSuperfunction({k: GrassmannNumber.scalar(1, n, ring)}, {})


def theta_times(poly, n: int = 0, ring: CoefficientRing = EXACT) -> LaurentSuperfunction:
    """theta * (sum_k c_k z^k) for a plain {exp: coeff-like} mapping."""
    b = {}
    for k, c in poly.items():
        b[k] = c if isinstance(c, GrassmannNumber) else GrassmannNumber.scalar(c, n, ring)
    return LaurentSuperfunction({}, b)


def is_superconformal(zp: LaurentSuperfunction, thetap: LaurentSuperfunction,
                      tol: float = 1e-10):
    """Test Dz' = theta' Dtheta'; returns (bool, residual superfunction)."""
    residual = zp.superderivative() - thetap * thetap.superderivative()
    exact = all(v.ring.kind == "exact"
                for p in (residual.a, residual.b) for v in p.values())
    if residual.is_zero():
        return True, residual
    if exact:
        return False, residual
    return residual.max_abs() <= tol, residual


def components_to_map(g, gamma, tau, s):
    """Build (z', theta') = (g + theta*gamma, tau + theta*s) from components.

    Each component is a {exponent: GrassmannNumber} mapping; g, s must be
    even, gamma, tau odd.
    """
    for name, comp, want in (("g", g, EVEN), ("gamma", gamma, ODD),
                             ("tau", tau, ODD), ("s", s, EVEN)):
        for v in comp.values():
            if not v.is_zero() and v.parity() != want:
                raise ParityError(f"component {name} must be {want}")
    zp = LaurentSuperfunction(g, gamma)
    thetap = LaurentSuperfunction(tau, s)
    return zp, thetap


def check_gts(zp: LaurentSuperfunction, thetap: LaurentSuperfunction) -> bool:
    """Verify gamma = tau*s and dg/dz = s^2 - tau dtau/dz for a built map."""
    g, gamma = zp.a, zp.b
    tau, s = thetap.a, thetap.b
    cond1 = _poly_add(gamma, _poly_neg(_poly_mul(tau, s)))
    rhs = _poly_add(_poly_mul(s, s), _poly_neg(_poly_mul(tau, _poly_dz(tau))))
    cond2 = _poly_add(_poly_dz(g), _poly_neg(rhs))
    return not cond1 and not cond2
