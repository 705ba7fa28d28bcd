"""The N=1 Neveu-Schwarz superconformal algebra and its Verma modules.

Modes are L_n (n integer, even) and G_r (r half-odd-integer, odd), with

    [L_n, L_m] = (n-m) L_{n+m} + c/12 n(n^2-1) delta_{n+m,0}
    [L_n, G_r] = (n/2 - r) G_{n+r}
    {G_r, G_s} = 2 L_{r+s} + c/3 (r^2 - 1/4) delta_{r+s,0}

Verma-module vectors are kept in the PBW basis
L_{-n1}...L_{-nk} G_{-r1}...G_{-rm} |Delta> with n1 >= ... >= nk >= 1 and
r1 > ... > rm >= 1/2.  Normal ordering commutes annihilators to the right
recursively; coefficients of vectors are Grassmann numbers, and odd
coefficients pick up a sign when a word with an odd number of G modes moves
past them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from supersle.grassmann import EXACT, GrassmannNumber, format_grassmann

HALF = Fraction(1, 2)


class CutoffOverflow(ValueError):
    """A monomial exceeded the module's level cutoff with trimming disabled."""


@dataclass(frozen=True)
class Mode:
    """A generator L_n (kind 'L') or G_r (kind 'G', r strictly half-integer)."""

    kind: str
    index: Fraction

    def __post_init__(self):
        object.__setattr__(self, "index", Fraction(self.index))
        if self.kind == "L":
            if self.index.denominator != 1:
                raise ValueError("L modes carry integer indices")
        elif self.kind == "G":
            if self.index.denominator != 2:
                raise ValueError("G modes carry half-odd-integer indices (NS sector)")
        else:
            raise ValueError(f"unknown mode kind {self.kind!r}")

    @property
    def odd(self) -> bool:
        return self.kind == "G"

    @property
    def lowering(self) -> bool:
        return self.index < 0

    def __repr__(self):
        return f"{self.kind}[{self.index}]"


def L(n) -> Mode:
    return Mode("L", Fraction(n))


def G(r) -> Mode:
    return Mode("G", Fraction(r))


def word_level(word) -> Fraction:
    return -sum((m.index for m in word), Fraction(0))


def word_parity(word) -> int:
    return sum(1 for m in word if m.odd) % 2


def _word_str(word) -> str:
    return "1" if not word else " ".join(repr(m) for m in word)


@dataclass(frozen=True)
class ModuleParams:
    """Central charge, highest weight, level cutoff of a truncated Verma module."""

    c: object
    delta: object
    level_cutoff: Fraction = Fraction(7, 2)

    def __post_init__(self):
        def coerce(x):
            x = sp.sympify(x)
            return sp.nsimplify(x, rational=True) if x.is_number else x

        object.__setattr__(self, "c", coerce(self.c))
        object.__setattr__(self, "delta", coerce(self.delta))
        object.__setattr__(self, "level_cutoff", Fraction(self.level_cutoff))
        if self.level_cutoff < 0 or self.level_cutoff.denominator not in (1, 2):
            raise ValueError("level cutoff must be a non-negative multiple of 1/2")


def _bracket_terms(a: Mode, b: Mode, c):
    """[a, b] (anticommutator if both odd) as [(scalar, Mode-or-None), ...]."""
    c = sp.sympify(c)
    out = []
    if a.kind == "L" and b.kind == "L":
        n, m = sp.Rational(a.index), sp.Rational(b.index)
        out.append((n - m, L(a.index + b.index)))
        if a.index + b.index == 0:
            central = c / 12 * n * (n**2 - 1)
            if central != 0:
                out.append((central, None))
    elif a.kind == "L" and b.kind == "G":
        n, r = sp.Rational(a.index), sp.Rational(b.index)
        out.append((n / 2 - r, G(a.index + b.index)))
    elif a.kind == "G" and b.kind == "L":
        # [G_r, L_n] = -[L_n, G_r]
        n, r = sp.Rational(b.index), sp.Rational(a.index)
        out.append((-(n / 2 - r), G(a.index + b.index)))
    else:
        r, s = sp.Rational(a.index), sp.Rational(b.index)
        out.append((sp.Integer(2), L(a.index + b.index)))
        if a.index + b.index == 0:
            central = c / 3 * (r**2 - sp.Rational(1, 4))
            if central != 0:
                out.append((central, None))
    return [(sp.expand(s), m) for s, m in out if sp.expand(s) != 0 or m is None]


def bracket(a: Mode, b: Mode, c) -> "AlgebraElement":
    """The (anti)commutator of two modes, central term included."""
    terms = {}
    for scalar, mode in _bracket_terms(a, b, c):
        word = () if mode is None else (mode,)
        terms[word] = terms.get(word, 0) + scalar
    return AlgebraElement({w: GrassmannNumber.scalar(s) for w, s in terms.items()})


class AlgebraElement:
    """Finite linear combination of generator words with Grassmann coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for word, coeff in (terms or {}).items():
            word = tuple(word)
            if not isinstance(coeff, GrassmannNumber):
                coeff = GrassmannNumber.scalar(coeff)
            if not coeff.is_zero():
                clean[word] = coeff
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("AlgebraElement is immutable")

    @classmethod
    def from_mode(cls, coeff, mode: Mode) -> "AlgebraElement":
        return cls({(mode,): coeff})

    def __add__(self, other):
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms[w] + c if w in terms else c
        return AlgebraElement(terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return AlgebraElement({w: -c for w, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            terms = {}
            for w1, c1 in self.terms.items():
                p1 = word_parity(w1)
                for w2, c2 in other.terms.items():
                    # move c2 through w1: sign on the odd part of c2
                    c2w = c2 if p1 == 0 else c2.grade_involution()
                    w = w1 + w2
                    c = c1 * c2w
                    terms[w] = terms[w] + c if w in terms else c
            return AlgebraElement(terms)
        return AlgebraElement({w: c * other for w, c in self.terms.items()})

    def __rmul__(self, other):
        # scalar or Grassmann from the left
        return AlgebraElement({w: other * c for w, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return not (self - other).terms

    def __repr__(self):
        if not self.terms:
            return "AlgebraElement(0)"
        bits = [f"({format_grassmann(c)})*{_word_str(w)}" for w, c in self.terms.items()]
        return "AlgebraElement(" + " + ".join(bits) + ")"


class VermaVector:
    """Vector in a level-truncated Verma module, PBW monomials -> coefficients."""

    __slots__ = ("entries", "params")

    def __init__(self, params: ModuleParams, entries=None):
        clean = {}
        for mono, coeff in (entries or {}).items():
            mono = tuple(mono)
            if not isinstance(coeff, GrassmannNumber):
                coeff = GrassmannNumber.scalar(coeff)
            if not coeff.is_zero():
                clean[mono] = coeff
        object.__setattr__(self, "entries", clean)
        object.__setattr__(self, "params", params)

    def __setattr__(self, name, value):
        raise AttributeError("VermaVector is immutable")

    def __add__(self, other):
        entries = dict(self.entries)
        for m, c in other.entries.items():
            entries[m] = entries[m] + c if m in entries else c
        return VermaVector(self.params, entries)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return VermaVector(self.params, {m: -c for m, c in self.entries.items()})

    def __mul__(self, other):
        return VermaVector(self.params, {m: c * other for m, c in self.entries.items()})

    def lmul(self, g) -> "VermaVector":
        """Left multiplication of every coefficient by g (Grassmann or scalar)."""
        return VermaVector(self.params, {m: g * c for m, c in self.entries.items()})

    def is_zero(self) -> bool:
        return not self.entries

    def level(self) -> Fraction:
        return max((word_level(m) for m in self.entries), default=Fraction(0))

    def coefficient(self, mono) -> GrassmannNumber:
        return self.entries.get(tuple(mono), GrassmannNumber.zero())

    def __eq__(self, other):
        if not isinstance(other, VermaVector):
            return NotImplemented
        diff = self - other
        return all(c.is_zero() for c in diff.entries.values())

    def __repr__(self):
        if not self.entries:
            return "VermaVector(0)"
        bits = [f"({format_grassmann(c)})*{_word_str(m)}|D>"
                for m, c in sorted(self.entries.items(), key=lambda kv: word_level(kv[0]))]
        return "VermaVector(" + " + ".join(bits) + ")"


def _pbw_ok(m: Mode, first: Mode) -> bool:
    """Can lowering mode m legally sit in front of a PBW word starting with first?"""
    if m.kind == "L":
        if first.kind == "G":
            return True
        return m.index <= first.index      # descending levels: -n1 <= -n2
    if first.kind == "L":
        return False
    return m.index < first.index           # G block strictly descending


class VermaModule:
    """Normal-ordering engine for a truncated NS Verma module."""

    def __init__(self, params: ModuleParams, trim: bool = True):
        self.params = params
        self.trim = trim
        self._cache = {}

    def vacuum(self, n: int = 0, ring=EXACT) -> VermaVector:
        return VermaVector(self.params, {(): GrassmannNumber.scalar(1, n, ring)})

    # -- scalar-coefficient core ------------------------------------------

    def _store(self, mono):
        if word_level(mono) > self.params.level_cutoff:
            if self.trim:
                return None
            raise CutoffOverflow(f"monomial {_word_str(mono)} exceeds level cutoff")
        return mono

    def act_mode(self, m: Mode, mono) -> dict:
        """Normal-order m * mono |Delta>; returns {PBW mono: sympy scalar}."""
        key = (m, mono)
        if key in self._cache:
            return self._cache[key]
        c, delta = self.params.c, self.params.delta
        out = {}
        if not mono:
            if m.lowering:
                stored = self._store((m,))
                if stored is not None:
                    out[stored] = sp.S.One
            elif m == L(0):
                out[()] = delta
            # annihilators (L_n n>=1, G_r r>=1/2) give zero
        elif m.lowering and _pbw_ok(m, mono[0]):
            stored = self._store((m,) + mono)
            if stored is not None:
                out[stored] = sp.S.One
        elif m == mono[0] and m.odd:
            # G_r G_r = (1/2){G_r, G_r}
            rest = mono[1:]
            for scalar, bm in _bracket_terms(m, m, c):
                scalar = scalar / 2
                sub = {rest: scalar} if bm is None else {
                    k: scalar * v for k, v in self.act_mode(bm, rest).items()}
                for k, v in sub.items():
                    out[k] = out.get(k, 0) + v
        else:
            first, rest = mono[0], mono[1:]
            sigma = -1 if (m.odd and first.odd) else 1
            for mid, s1 in self.act_mode(m, rest).items():
                for fin, s2 in self.act_mode(first, mid).items():
                    out[fin] = out.get(fin, 0) + sigma * s1 * s2
            for scalar, bm in _bracket_terms(m, first, c):
                sub = {rest: scalar} if bm is None else {
                    k: scalar * v for k, v in self.act_mode(bm, rest).items()}
                for k, v in sub.items():
                    out[k] = out.get(k, 0) + v
        out = {k: sp.expand(v) for k, v in out.items()}
        out = {k: v for k, v in out.items() if v != 0}
        self._cache[key] = out
        return out

    def act_word(self, word, mono) -> dict:
        """Normal-order word * mono |Delta> with scalar coefficients."""
        state = {tuple(mono): sp.S.One}
        for m in reversed(tuple(word)):
            nxt = {}
            for mo, s in state.items():
                for k, v in self.act_mode(m, mo).items():
                    nxt[k] = nxt.get(k, 0) + s * v
            state = {k: v for k, v in ((k, sp.expand(v)) for k, v in nxt.items()) if v != 0}
        return state

    # -- Grassmann-coefficient interface ----------------------------------

    def apply(self, elem: AlgebraElement, v: VermaVector) -> VermaVector:
        """elem acting on v, output in the PBW basis."""
        out = VermaVector(self.params)
        for word, c in elem.terms.items():
            p = word_parity(word)
            for mono, d in v.entries.items():
                # word passes the coefficient d: sign on d's odd part
                d_adj = d if p == 0 else d.grade_involution()
                coeff = c * d_adj
                entries = {}
                for fin, s in self.act_word(word, mono).items():
                    entries[fin] = coeff * s
                out = out + VermaVector(self.params, entries)
        return out


def apply(elem: AlgebraElement, v: VermaVector, trim: bool = True) -> VermaVector:
    return VermaModule(v.params, trim=trim).apply(elem, v)


# -- singular vectors ---------------------------------------------------------


def singular_vector_32(params: ModuleParams) -> VermaVector:
    """|chi;3/2> = ((Delta+1/2) G_{-3/2} - L_{-1} G_{-1/2}) |Delta>."""
    return VermaVector(params, {
        (G(Fraction(-3, 2)),): params.delta + sp.Rational(1, 2),
        (L(-1), G(-HALF)): sp.Integer(-1),
    })


def raising_modes(level: Fraction, virasoro_only: bool = False):
    level = Fraction(level)
    modes = [L(n) for n in range(1, int(level) + 1)]
    if not virasoro_only:
        r = HALF
        while r <= level:
            modes.append(G(r))
            r += 1
    return modes


def is_singular(v: VermaVector, virasoro_only: bool = False):
    """True iff every raising mode of level <= level(v) annihilates v."""
    if v.is_zero():
        return True, []
    module = VermaModule(v.params, trim=True)
    obstructions = []
    for m in raising_modes(v.level(), virasoro_only):
        res = module.apply(AlgebraElement.from_mode(1, m), v)
        if not res.is_zero():
            obstructions.append((m, res))
    return not obstructions, obstructions


def singular_condition_residual(params: ModuleParams):
    """12 Delta - (2 Delta + 1)(3 Delta + c); zero iff chi is singular."""
    d, c = params.delta, params.c
    return sp.expand(12 * d - (2 * d + 1) * (3 * d + c))


def singularity_report(params: ModuleParams) -> dict:
    chi = singular_vector_32(params)
    ok, obstructions = is_singular(chi)
    d, c = params.delta, params.c
    return {
        "condition": "12D=(2D+1)(3D+c)",
        "lhs": str(sp.expand(12 * d)),
        "rhs": str(sp.expand((2 * d + 1) * (3 * d + c))),
        "singular": ok,
        "obstructions": [{"mode": repr(m), "value": repr(vec)} for m, vec in obstructions],
    }


def virasoro_level2_vector(kappa) -> VermaVector:
    """(-2 L_{-2} + kappa/2 L_{-1}^2)|Delta> at the matched (c, Delta)."""
    kappa = sp.nsimplify(sp.sympify(kappa), rational=True)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    params = params_from_kappa_virasoro(kappa)
    return VermaVector(params, {
        (L(-2),): sp.Integer(-2),
        (L(-1), L(-1)): kappa / 2,
    })


def params_from_kappa_virasoro(kappa, level_cutoff=Fraction(7, 2)) -> ModuleParams:
    """c = 1 - 3(4-kappa)^2/(2 kappa), Delta = (6-kappa)/(2 kappa)."""
    kappa = sp.nsimplify(sp.sympify(kappa), rational=True)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    c = 1 - sp.Rational(3, 2) * (4 - kappa) ** 2 / kappa
    delta = (6 - kappa) / (2 * kappa)
    return ModuleParams(c, delta, level_cutoff)


def is_singular_level2(v: VermaVector):
    """Virasoro-sector singularity check: only L_1 and L_2 are applied."""
    return is_singular(v, virasoro_only=True)


def params_from_kappa_ns(kappa, level_cutoff=Fraction(7, 2)) -> ModuleParams:
    """c = 15/2 - 3(kappa + 1/kappa), Delta = (2-kappa)/(2 kappa)."""
    kappa = sp.nsimplify(sp.sympify(kappa), rational=True)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    c = sp.Rational(15, 2) - 3 * (kappa + 1 / kappa)
    delta = (2 - kappa) / (2 * kappa)
    return ModuleParams(c, delta, level_cutoff)


# -- quotient by the singular submodule ---------------------------------------


def pbw_words(max_level: Fraction):
    """All PBW-ordered lowering words of level <= max_level (empty included)."""
    max_level = Fraction(max_level)
    l_parts = []

    def gen_l(budget, max_part, acc):
        l_parts.append(tuple(acc))
        n = min(int(budget), max_part)
        while n >= 1:
            acc.append(n)
            gen_l(budget - n, n, acc)
            acc.pop()
            n -= 1

    gen_l(max_level, int(max_level) if max_level >= 1 else 0, [])

    words = []
    for lp in l_parts:
        used = sum(lp)
        g_sets = []

        def gen_g(budget, max_r, acc):
            g_sets.append(tuple(acc))
            r = max_r
            while r >= HALF:
                if r <= budget:
                    acc.append(r)
                    gen_g(budget - r, r - 1, acc)
                    acc.pop()
                r -= 1

        top = max_level - used
        # largest admissible half-odd integer <= top
        r0 = Fraction(int(2 * top), 2)
        if r0.denominator == 1:
            r0 -= HALF
        gen_g(top, r0, [])
        for gs in g_sets:
            words.append(tuple(L(-n) for n in lp) + tuple(G(-r) for r in gs))
    words.sort(key=lambda w: (word_level(w), len(w), _word_str(w)))
    return words


class Projector:
    """Exact projector onto a complement of the singular-vector submodule."""

    def __init__(self, params: ModuleParams, rows):
        self.params = params
        self.rows = rows  # list of (pivot mono, {mono: sympy scalar}); row[pivot] == 1

    def __call__(self, v: VermaVector) -> VermaVector:
        out = v
        for pivot, row in self.rows:
            c = out.entries.get(pivot)
            if c is None:
                continue
            entries = {m: c * (-s) for m, s in row.items()}
            out = out + VermaVector(self.params, entries)
        return out

    def matrix(self, words):
        """Dense float matrix of the projection in the given word basis."""
        import numpy as np

        idx = {w: i for i, w in enumerate(words)}
        P = np.eye(len(words), dtype=complex)
        for pivot, row in self.rows:
            if pivot not in idx:
                continue
            col = np.zeros(len(words), dtype=complex)
            for m, s in row.items():
                if m in idx:
                    col[idx[m]] = complex(s)
            P[:, idx[pivot]] -= col
        return P


def quotient_projection(params: ModuleParams,
                        cutoff: Fraction | None = None,
                        check_singular: bool = True) -> Projector:
    """Projector annihilating the descendant span of |chi;3/2> up to cutoff.

    With ``check_singular=False`` the same construction is carried out for
    non-singular (c, Delta); the result then projects out the span generated
    by the level-3/2 vector built from the same formula, which is useful as a
    detuned control in statistical tests.
    """
    if check_singular and singular_condition_residual(params) != 0:
        raise ValueError("(c, Delta) do not satisfy the singularity condition")
    if cutoff is None:
        cutoff = params.level_cutoff
    cutoff = Fraction(cutoff)
    work = ModuleParams(params.c, params.delta, cutoff)
    module = VermaModule(work, trim=True)
    chi = singular_vector_32(work)
    span = []
    for w in pbw_words(cutoff - Fraction(3, 2)):
        vec = module.apply(AlgebraElement({w: 1}), chi)
        row = {m: c.body() for m, c in vec.entries.items()}
        row = {m: sp.expand(s) for m, s in row.items() if sp.expand(s) != 0}
        if row:
            span.append(row)
    # exact Gaussian elimination to reduced row-echelon rows with unit pivots
    order = pbw_words(cutoff)
    pos = {w: i for i, w in enumerate(order)}
    rows = []
    for row in span:
        for pivot, prow in rows:
            if pivot in row:
                f = row[pivot]
                for m, s in prow.items():
                    row[m] = sp.expand(row.get(m, 0) - f * s)
                row = {m: s for m, s in row.items() if s != 0}
        if not row:
            continue
        pivot = min(row, key=lambda m: pos[m])
        pv = row[pivot]
        row = {m: sp.expand(s / pv) for m, s in row.items()}
        # back-substitute into existing rows
        new_rows = []
        for p2, r2 in rows:
            if pivot in r2:
                f = r2[pivot]
                r2 = {m: sp.expand(r2.get(m, 0) - f * row.get(m, 0))
                      for m in set(r2) | set(row)}
                r2 = {m: s for m, s in r2.items() if s != 0}
            new_rows.append((p2, r2))
        rows = new_rows
        rows.append((pivot, row))
    return Projector(params, rows)
