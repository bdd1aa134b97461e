"""The field of exponentials of formal integrals.

Elements are fractions of finite sums  sum_i c_i * exp(r_i)  where every
exponent r_i is a purely divergent canonical integrand (no offset, no
convergent terms).  Finite parts are pulled into the coefficients at
construction, so two sums are equal exactly when their coefficient maps are.
"""
from __future__ import annotations

import cmath
import sys
from dataclasses import dataclass

from .renalg import (
    RenInt, EqVerdict, SYMBOLIC, NOT_EQUAL, numeric, split_finite_divergent, ZERO_REL,
)
from .symgrammar import Symbol, add, scale, zero


class ZeroDivision(ZeroDivisionError):
    pass


def _exp_key(sym: Symbol):
    return tuple((t.signature, t.coeff.real, t.coeff.imag) for t in sym.terms)


def _exp_add(e1: Symbol, e2: Symbol) -> Symbol:
    out = add(e1, e2)
    mag = max((abs(t.coeff) for t in e1.terms + e2.terms), default=0.0)
    if any(abs(t.coeff) <= ZERO_REL * mag for t in out.terms):
        out = Symbol(tuple(t for t in out.terms if abs(t.coeff) > ZERO_REL * mag), out.d)
    return out


@dataclass(frozen=True)
class ERenSum:
    items: tuple = ()   # ((exponent Symbol, coeff), ...) sorted by exponent key
    d: int = 3

    @classmethod
    def build(cls, mapping, d):
        items = [(e, complex(c)) for e, c in mapping.items() if c != 0]
        items.sort(key=lambda kv: _exp_key(kv[0]))
        return cls(tuple(items), d)

    @classmethod
    def const(cls, c, d):
        return cls.build({zero(d): c}, d)

    def as_dict(self):
        return dict(self.items)

    @property
    def is_zero(self):
        return not self.items

    def __len__(self):
        return len(self.items)


# a sum within a few ulps of its operands has no significant bits left
_CANCEL = 8 * sys.float_info.epsilon


def sum_add(a: ERenSum, b: ERenSum) -> ERenSum:
    acc = a.as_dict()
    for e, c in b.items:
        old = acc.get(e, 0)
        new = old + c
        if abs(new) <= _CANCEL * max(abs(old), abs(c)):
            new = 0
        acc[e] = new
    return ERenSum.build(acc, a.d)


def sum_mul(a: ERenSum, b: ERenSum) -> ERenSum:
    acc = {}
    for e1, c1 in a.items:
        for e2, c2 in b.items:
            e = _exp_add(e1, e2)
            acc[e] = acc.get(e, 0) + c1 * c2
    return ERenSum.build(acc, a.d)


def sum_shift(a: ERenSum, c, e: Symbol) -> ERenSum:
    """Multiply every term by c * exp(e)."""
    return ERenSum.build({_exp_add(x, e): v * c for x, v in a.items}, a.d)


def _ratio(num: ERenSum, den: ERenSum):
    """lambda, shift with num = lambda * exp(shift) * den, or None."""
    if len(num) != len(den) or not den.items:
        return None
    e0, c0 = den.items[0]
    for en, cn in num.items:
        shift = _exp_add(en, scale(-1, e0))
        lam = cn / c0
        cand = sum_shift(den, lam, shift)
        if _sums_close(cand, num, 0.0):
            return lam, shift
    return None


def _sums_close(a: ERenSum, b: ERenSum, tol):
    if [e for e, _ in a.items] != [e for e, _ in b.items]:
        return False
    for (_, x), (_, y) in zip(a.items, b.items):
        if tol == 0:
            if x != y:
                return False
        elif abs(x - y) > tol * max(1.0, abs(x), abs(y)):
            return False
    return True


@dataclass(frozen=True)
class ERenElem:
    num: ERenSum
    den: ERenSum

    @property
    def d(self):
        return self.num.d

    def __add__(self, o):
        return eren_add(self, _lift(o, self.d))

    __radd__ = __add__

    def __mul__(self, o):
        return eren_mul(self, _lift(o, self.d))

    __rmul__ = __mul__

    def __neg__(self):
        return eren_neg(self)

    def __sub__(self, o):
        return eren_add(self, eren_neg(_lift(o, self.d)))

    def __truediv__(self, o):
        return eren_div(self, _lift(o, self.d))

    @property
    def is_zero(self):
        return self.num.is_zero

    def to_dict(self):
        def ser(s):
            return [[[c.real, c.imag], RenInt(e, 0j).to_dict()] for e, c in s.items]
        return {"num": ser(self.num), "den": ser(self.den)}

    @classmethod
    def from_dict(cls, data, d):
        def de(lst):
            acc = {}
            for (re, im), r in lst:
                acc[RenInt.from_dict(r, d).integrand] = complex(re, im)
            return ERenSum.build(acc, d)
        return make(de(data["num"]), de(data["den"]))

    def __str__(self):
        from .symgrammar import to_text

        def fmt(s):
            if s.is_zero:
                return "0"
            parts = []
            for e, c in s.items:
                if e.is_zero:
                    parts.append(f"{c:.12g}")
                else:
                    parts.append(f"({c:.12g})*exp(I[{to_text(e)}])")
            return " + ".join(parts)
        if self.den.items == ((zero(self.d), 1 + 0j),):
            return fmt(self.num)
        return f"[{fmt(self.num)}] / [{fmt(self.den)}]"


def _lift(x, d):
    if isinstance(x, ERenElem):
        return x
    return scalar(x, d)


def make(num: ERenSum, den: ERenSum) -> ERenElem:
    if den.is_zero:
        raise ZeroDivision("zero denominator")
    d = num.d
    if num.is_zero:
        return ERenElem(num, ERenSum.const(1, d))
    if len(den) == 1:
        (e, c), = den.items
        return ERenElem(sum_shift(num, 1 / c, scale(-1, e)), ERenSum.const(1, d))
    e0, c0 = den.items[0]
    num = sum_shift(num, 1 / c0, scale(-1, e0))
    den = sum_shift(den, 1 / c0, scale(-1, e0))
    r = _ratio(num, den)
    if r is not None:
        lam, shift = r
        return ERenElem(ERenSum.build({shift: lam}, d), ERenSum.const(1, d))
    return ERenElem(num, den)


def scalar(c, d) -> ERenElem:
    return ERenElem(ERenSum.const(c, d), ERenSum.const(1, d))


def one(d):
    return scalar(1, d)


def exp_ren(r: RenInt) -> ERenElem:
    fin, div = split_finite_divergent(r)
    return ERenElem(ERenSum.build({div.integrand: cmath.exp(fin)}, r.d), ERenSum.const(1, r.d))


def eren_add(a: ERenElem, b: ERenElem) -> ERenElem:
    if a.den == b.den:
        return make(sum_add(a.num, b.num), a.den)
    return make(sum_add(sum_mul(a.num, b.den), sum_mul(b.num, a.den)), sum_mul(a.den, b.den))


def eren_mul(a: ERenElem, b: ERenElem) -> ERenElem:
    return make(sum_mul(a.num, b.num), sum_mul(a.den, b.den))


def eren_neg(a: ERenElem) -> ERenElem:
    return ERenElem(ERenSum.build({e: -c for e, c in a.num.items}, a.d), a.den)


def eren_inv(a: ERenElem) -> ERenElem:
    if a.is_zero:
        raise ZeroDivision("inverse of zero")
    return make(a.den, a.num)


def eren_div(a: ERenElem, b: ERenElem) -> ERenElem:
    if b.is_zero:
        raise ZeroDivision("division by zero element")
    return make(sum_mul(a.num, b.den), sum_mul(a.den, b.num))


def eren_equal(a: ERenElem, b: ERenElem, tol: float = 1e-9) -> EqVerdict:
    lhs = sum_mul(a.num, b.den)
    rhs = sum_mul(b.num, a.den)
    if _sums_close(lhs, rhs, 0.0):
        return SYMBOLIC
    if _sums_close(lhs, rhs, tol):
        return numeric(tol)
    return NOT_EQUAL


def as_complex(a: ERenElem):
    if a.is_zero:
        return 0j
    if len(a.den) == 1 and len(a.num) == 1:
        (e, c), = a.num.items
        (f, k), = a.den.items
        if e.is_zero and f.is_zero:
            return c / k
    return None


def is_scalar(a: ERenElem) -> bool:
    return as_complex(a) is not None


def eren_conj(a: ERenElem) -> ERenElem:
    """Complex conjugation: conjugates coefficients and exponent integrands."""
    from .symgrammar import conjugate

    def conj_sum(s):
        return ERenSum.build({conjugate(e): c.conjugate() for e, c in s.items}, s.d)
    return make(conj_sum(a.num), conj_sum(a.den))
