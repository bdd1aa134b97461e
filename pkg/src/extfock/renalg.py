"""Formal radial integrals S_{d-1} * int_0^oo r^(d-1) f(r) dr.

Every integrand f splits uniquely (given the basis below) into a finite
number F(f) plus a combination of divergent basis atoms:

    |k|^p            for p != -d   (IR divergent if p < -d, UV if p > -d)
    |k|^-d           (log divergent at both ends)
    |k|^-d * 1[r>1]  (log divergent at infinity only)

The split uses exact asymptotic expansions at 0 and infinity.  F is linear,
agrees with the honest integral on convergent integrands and vanishes on
every atom, which is what makes the divergent part a canonical
representative of the class modulo convergent integrals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy import integrate

from .symgrammar import INF, Symbol, SymTerm, make_term, multiply, conjugate, scale, add, zero

SERIES_TERMS = 48
ZERO_REL = 1e-12


def sphere_area(d: int) -> float:
    # surface of the unit sphere in R^d; d=1 counts both half-lines
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


# ------------------------------------------------------------ convergence

class ConvergenceClass:
    Convergent = "Convergent"
    IRDivergent = "IRDivergent"
    UVDivergent = "UVDivergent"
    BothDivergent = "BothDivergent"

    @staticmethod
    def of(ir: bool, uv: bool) -> str:
        if ir and uv:
            return ConvergenceClass.BothDivergent
        if ir:
            return ConvergenceClass.IRDivergent
        if uv:
            return ConvergenceClass.UVDivergent
        return ConvergenceClass.Convergent


@dataclass(frozen=True)
class EqVerdict:
    kind: str
    tolerance: float | None = None

    EQUAL_SYMBOLIC = "EqualSymbolic"
    EQUAL_NUMERIC = "EqualNumeric"
    NOT_EQUAL = "NotEqual"
    UNKNOWN = "Unknown"

    def __bool__(self):
        return self.kind in (self.EQUAL_SYMBOLIC, self.EQUAL_NUMERIC)

    @property
    def symbolic(self):
        return self.kind == self.EQUAL_SYMBOLIC

    def __str__(self):
        if self.kind == self.EQUAL_NUMERIC:
            return f"EqualNumeric({self.tolerance:g})"
        return self.kind


SYMBOLIC = EqVerdict(EqVerdict.EQUAL_SYMBOLIC)
NOT_EQUAL = EqVerdict(EqVerdict.NOT_EQUAL)


def numeric(tol):
    return EqVerdict(EqVerdict.EQUAL_NUMERIC, tol)


# ------------------------------------------------------------ series

def _binom(e: Fraction, n: int):
    out = [Fraction(1)]
    for k in range(1, n + 1):
        out.append(out[-1] * (e - k + 1) / k)
    return out


def _poly_mul(p, q, n):
    out = [0.0] * (n + 1)
    for i, x in enumerate(p):
        if x == 0:
            continue
        for j in range(0, n + 1 - i):
            out[i + j] += x * q[j]
    return out


def _mass_series(mass, n, uv):
    # product of (1 + x_i)^(b_i/2) with x_i = (r/mu)^2 (IR) or (mu/r)^2 (UV),
    # returned as coefficients of r^(2k) (IR) or r^(-2k) (UV)
    acc = [1.0] + [0.0] * n
    for b, mu in mass:
        bin_ = _binom(b / 2, n)
        fac = mu * mu if uv else 1 / (mu * mu)
        acc = _poly_mul(acc, [float(c) * fac ** k for k, c in enumerate(bin_)], n)
    return acc


class Radial:
    """An integrand with known asymptotic series at 0 and at infinity.

    ir / uv are lists of (exponent, coeff) valid for r < rho / r > R; None
    means the function vanishes identically on (0, ir_cut) or (uv_cut, oo).
    """

    def __init__(self, d, f, ir, uv, rho, R, breaks=(), ir_cut=None, uv_cut=None):
        self.d = d
        self.f = f
        self.ir = ir
        self.uv = uv
        self.rho = rho
        self.R = R
        self.breaks = tuple(breaks)
        self.ir_cut = ir_cut
        self.uv_cut = uv_cut

    def divergent(self):
        d = self.d
        out = {}
        if self.ir is not None:
            for p, c in self.ir:
                if p < -d:
                    out[(0, p)] = out.get((0, p), 0) + c
                elif p == -d:
                    out[(0, p)] = out.get((0, p), 0) + c
                    out[(1, p)] = out.get((1, p), 0) - c
        if self.uv is not None:
            for p, c in self.uv:
                if p > -d:
                    out[(0, p)] = out.get((0, p), 0) + c
                elif p == -d:
                    out[(1, p)] = out.get((1, p), 0) + c
        return out

    def finite(self, tol=1e-13):
        d = self.d
        total = 0.0
        # IR side on (0, 1): subtract the divergent part of the expansion
        if self.ir is None:
            lo = min(self.ir_cut, 1.0)
        else:
            rho = min(self.rho, 1.0)
            for p, c in self.ir:
                q = p + d
                if q > 0:
                    total += c * rho ** float(q) / float(q)
                elif q < 0:
                    total += c / float(q)
            lo = rho
        div_ir = [(p, c) for p, c in (self.ir or []) if p <= -d]
        if lo < 1.0:
            total += self._quad(lo, 1.0, div_ir, tol)
        # UV side on (1, oo)
        if self.uv is None:
            hi = max(self.uv_cut, 1.0)
        else:
            R = max(self.R, 1.0)
            for p, c in self.uv:
                q = p + d
                if q < 0:
                    total += -c * R ** float(q) / float(q)
                elif q > 0:
                    total += -c / float(q)
            hi = R
        div_uv = [(p, c) for p, c in (self.uv or []) if p >= -d]
        if hi > 1.0:
            total += self._quad(1.0, hi, div_uv, tol)
        return sphere_area(d) * total

    def _quad(self, lo, hi, sub, tol):
        d = self.d
        pts = sorted({x for x in self.breaks if lo < x < hi})
        edges = [lo] + pts + [hi]

        def g(r, part):
            val = complex(self.f(r))
            for p, c in sub:
                val -= c * r ** float(p)
            val *= r ** (d - 1)
            return val.real if part == 0 else val.imag

        out = 0j
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= 0:
                continue
            re, _ = integrate.quad(g, a, b, args=(0,), epsabs=0, epsrel=tol, limit=400)
            im, _ = integrate.quad(g, a, b, args=(1,), epsabs=0, epsrel=tol, limit=400)
            out += re + 1j * im
        return out


def _closed_power(a: Fraction, d: int, lo: float, hi: float):
    """Finite part of int_lo^hi r^(a+d-1) dr, with the divergent pieces dropped
    exactly as Radial.finite does for a pure power."""
    q = a + d
    qf = float(q)

    def prim(x):
        if q == 0:
            return math.log(x)
        return x ** qf / qf

    ir_series = lo == 0 and q <= 0
    uv_series = hi == INF and q >= 0
    total = 0.0
    # (0,1) contribution
    a1, b1 = lo, min(hi, 1.0)
    if ir_series:
        # integrand minus r^(q-1) is -1[r > hi] on (0, 1)
        if hi < 1.0:
            total -= prim(1.0) - prim(hi)
        if q < 0:
            total += 1 / qf
    elif a1 < b1:
        total += (prim(b1) if b1 > 0 else 0.0) - (prim(a1) if a1 > 0 else 0.0)
    # (1,oo) contribution
    a2, b2 = max(lo, 1.0), hi
    if uv_series:
        if lo > 1.0:
            total -= prim(lo) - prim(1.0)
        if q > 0:
            total -= 1 / qf
    elif a2 < b2:
        if b2 == INF:
            total += -prim(a2)
        else:
            total += prim(b2) - prim(a2)
    return total


def term_radial(t: SymTerm, d: int, n=SERIES_TERMS) -> Radial:
    lo, hi = t.window if t.window is not None else (0.0, INF)
    mus = [mu for _, mu in t.mass]
    ir = uv = None
    if lo == 0:
        k = _mass_series(t.mass, n, uv=False)
        pref = t.coeff * math.prod(mu ** float(b) for b, mu in t.mass)
        ir = [(t.a + 2 * j, pref * c) for j, c in enumerate(k) if c != 0]
    if hi == INF:
        k = _mass_series(t.mass, n, uv=True)
        top = t.a + sum((b for b, _ in t.mass), Fraction(0))
        uv = [(top - 2 * j, t.coeff * c) for j, c in enumerate(k) if c != 0]
    rho = min(mus) / 2 if mus else 1.0
    R = 2 * max(mus) if mus else 1.0
    rho = min(rho, hi)
    R = max(R, lo)
    breaks = [x for x in (lo, hi) if 0 < x < INF] + mus
    return Radial(d, lambda r: complex(t.eval(r)), ir, uv, rho, R, breaks,
                  ir_cut=lo if lo > 0 else None, uv_cut=hi if hi < INF else None)


@lru_cache(maxsize=65536)
def _term_parts(t: SymTerm, d: int):
    """(finite part, divergent atom dict) for one term."""
    if not t.mass:
        lo, hi = t.window if t.window is not None else (0.0, INF)
        fin = sphere_area(d) * t.coeff * _closed_power(t.a, d, lo, hi)
        div = {}
        q = t.a + d
        if lo == 0 and q < 0:
            div[(0, t.a)] = t.coeff
        if hi == INF and q > 0:
            div[(0, t.a)] = t.coeff
        if q == 0:
            if lo == 0:
                div[(0, t.a)] = t.coeff
                if hi < INF:
                    div[(1, t.a)] = -t.coeff
            elif hi == INF:
                div[(1, t.a)] = t.coeff
        return complex(fin), div
    rad = term_radial(t, d)
    return complex(rad.finite()), rad.divergent()


def term_converges(t: SymTerm, d: int) -> bool:
    return t.ir_degree + d > 0 and t.uv_degree + d < 0


def _clean(div, scale_):
    thr = ZERO_REL * max(scale_, 1e-300)
    return {k: v for k, v in div.items() if abs(v) > thr}


def decompose(sym: Symbol):
    """(finite part, divergent atom coefficients) of an integrand."""
    fin = 0j
    div = {}
    mag = 0.0
    for t in sym.terms:
        f, dv = _term_parts(t, sym.d)
        fin += f
        for k, c in dv.items():
            div[k] = div.get(k, 0) + c
            mag = max(mag, abs(c))
    return fin, _clean(div, mag)


def atoms_symbol(div, d) -> Symbol:
    terms = []
    for (kind, p), c in div.items():
        if kind == 0:
            terms.append(make_term(c, p))
        else:
            terms.append(make_term(c, p, (), (1.0, INF)))
    return Symbol.build(terms, d)


def _div_class(div, d):
    ir = any(kind == 0 and p <= -d for (kind, p) in div)
    uv = any(kind == 0 and p > -d for (kind, p) in div)
    tot = div.get((0, Fraction(-d)), 0) + div.get((1, Fraction(-d)), 0)
    uv = uv or abs(tot) > 0
    return ir, uv


# ------------------------------------------------------------ RenInt

@dataclass(frozen=True)
class RenInt:
    integrand: Symbol
    offset: complex = 0j

    @property
    def d(self):
        return self.integrand.d

    def __add__(self, other):
        return ren_add(self, other)

    def __neg__(self):
        return ren_scale(-1, self)

    def __sub__(self, other):
        return ren_add(self, ren_scale(-1, other))

    def __rmul__(self, c):
        return ren_scale(c, self)

    def to_dict(self):
        from .symgrammar import to_text
        return {"offset": [self.offset.real, self.offset.imag], "integrand": to_text(self.integrand)}

    @classmethod
    def from_dict(cls, data, d):
        from .symgrammar import parse_symbol
        off = data["offset"]
        return normalize(parse_symbol(data["integrand"], d), complex(off[0], off[1]))

    def __str__(self):
        from .symgrammar import to_text
        if self.integrand.is_zero:
            return f"{self.offset:.12g}"
        if self.offset == 0:
            return f"I[{to_text(self.integrand)}]"
        return f"{self.offset:.12g} + I[{to_text(self.integrand)}]"


def normalize(integrand: Symbol, offset=0j) -> RenInt:
    """Fold convergent terms into the offset; fully convergent -> integrand 0."""
    offset = complex(offset)
    keep = []
    for t in integrand.terms:
        if term_converges(t, integrand.d):
            offset += _term_parts(t, integrand.d)[0]
        else:
            keep.append(t)
    rest = Symbol(tuple(keep), integrand.d)
    if keep:
        fin, div = decompose(rest)
        if not div:
            return RenInt(zero(integrand.d), offset + fin)
    return RenInt(rest, offset)


def scalar(c, d) -> RenInt:
    return RenInt(zero(d), complex(c))


def from_radial(rad: Radial) -> RenInt:
    """RenInt for an integrand outside the grammar, given its expansions."""
    fin = rad.finite()
    div = rad.divergent()
    mag = max((abs(v) for v in div.values()), default=0.0)
    return RenInt(atoms_symbol(_clean(div, mag), rad.d), complex(fin))


def pair(s: Symbol, t: Symbol) -> RenInt:
    """<s, t> = int conj(s) t, antilinear in the first slot."""
    if s.d != t.d:
        raise ValueError("dimension mismatch")
    return normalize(multiply(conjugate(s), t))


def classify(r: RenInt) -> str:
    if r.integrand.is_zero:
        return ConvergenceClass.Convergent
    _, div = decompose(r.integrand)
    return ConvergenceClass.of(*_div_class(div, r.d))


def is_convergent(r: RenInt) -> bool:
    return classify(r) == ConvergenceClass.Convergent


class NotConvergent(ValueError):
    pass


def evaluate_convergent(r: RenInt, tol: float = 1e-12) -> complex:
    if not is_convergent(r):
        raise NotConvergent(f"integral is {classify(r)}")
    if r.integrand.is_zero:
        return r.offset
    return r.offset + decompose(r.integrand)[0]


def ren_add(r1: RenInt, r2: RenInt) -> RenInt:
    if r1.d != r2.d:
        raise ValueError("dimension mismatch")
    return normalize(add(r1.integrand, r2.integrand), r1.offset + r2.offset)


def ren_scale(c, r: RenInt) -> RenInt:
    c = complex(c)
    if c == 0:
        return scalar(0, r.d)
    return normalize(scale(c, r.integrand), c * r.offset)


def ren_sum(items, d) -> RenInt:
    out = scalar(0, d)
    for r in items:
        out = ren_add(out, r)
    return out


def ren_equal(r1: RenInt, r2: RenInt, tol: float = 1e-9) -> EqVerdict:
    if r1.integrand == r2.integrand and r1.offset == r2.offset:
        return SYMBOLIC
    diff = ren_add(r1, ren_scale(-1, r2))
    if not is_convergent(diff):
        return NOT_EQUAL
    val = evaluate_convergent(diff)
    return numeric(tol) if abs(val) <= tol else NOT_EQUAL


def split_finite_divergent(r: RenInt):
    if r.integrand.is_zero:
        return r.offset, scalar(0, r.d)
    fin, div = decompose(r.integrand)
    return r.offset + fin, RenInt(atoms_symbol(div, r.d), 0j)


def divergent_key(r: RenInt):
    """Hashable canonical form of the divergent part (offset-free)."""
    return split_finite_divergent(r)[1].integrand


def in_positive_cone(r: RenInt) -> bool:
    ok = all(t.coeff.imag == 0 and t.coeff.real >= 0 for t in r.integrand.terms)
    return ok and r.offset.imag == 0 and r.offset.real >= 0


def same_class(r1: RenInt, r2: RenInt) -> EqVerdict:
    if r1.d != r2.d:
        raise ValueError("dimension mismatch")
    return SYMBOLIC if is_convergent(ren_add(r1, ren_scale(-1, r2))) else NOT_EQUAL


# ------------------------------------------------------------ RenPoly

class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class RenPoly:
    """Polynomial in the divergent atoms with complex coefficients.

    terms maps a sorted tuple of atom keys (a monomial) to its coefficient.
    """
    terms: tuple = ()
    d: int = 3

    @classmethod
    def build(cls, mapping, d):
        items = [(m, complex(c)) for m, c in mapping.items() if c != 0]
        return cls(tuple(sorted(items, key=lambda kv: _mono_key(kv[0]))), d)

    @classmethod
    def const(cls, c, d):
        return cls.build({(): c}, d)

    @classmethod
    def from_renint(cls, r: RenInt):
        fin, div = split_finite_divergent(r)
        mapping = {(): fin}
        if not div.integrand.is_zero:
            _, atoms = decompose(div.integrand)
            for k, c in atoms.items():
                mapping[(k,)] = mapping.get((k,), 0) + c
        return cls.build(mapping, r.d)

    @property
    def degree(self):
        return max((len(m) for m, _ in self.terms), default=0)

    def as_dict(self):
        return dict(self.terms)

    def is_scalar(self):
        return self.degree == 0

    def scalar_value(self):
        return self.as_dict().get((), 0j)

    def divergent_part(self):
        return RenPoly(tuple((m, c) for m, c in self.terms if m), self.d)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.terms:
            if not m:
                parts.append(f"{c:.12g}")
            else:
                fac = "*".join(_atom_text(k, self.d) for k in m)
                parts.append(f"({c:.12g})*{fac}")
        return " + ".join(parts)


def _atom_text(key, d):
    kind, p = key
    if kind == 0:
        return f"I[pow({p})]"
    return f"I[pow({p})*window(1.0,inf)]"


def _mono_key(m):
    return (len(m), tuple((k, float(p)) for k, p in m))


def poly_add(p: RenPoly, q: RenPoly) -> RenPoly:
    acc = p.as_dict()
    for m, c in q.terms:
        acc[m] = acc.get(m, 0) + c
    return RenPoly.build(acc, p.d)


def poly_mul(p: RenPoly, q: RenPoly, max_degree: int | None = None) -> RenPoly:
    acc = {}
    for m1, c1 in p.terms:
        for m2, c2 in q.terms:
            m = tuple(sorted(m1 + m2, key=lambda k: (k[0], k[1])))
            acc[m] = acc.get(m, 0) + c1 * c2
    out = RenPoly.build(acc, p.d)
    if max_degree is not None and out.degree > max_degree:
        raise DegreeError(f"degree {out.degree} exceeds {max_degree}")
    return out


def poly_scale(c, p: RenPoly) -> RenPoly:
    return RenPoly.build({m: c * v for m, v in p.terms}, p.d)


def monomials(p: RenPoly, degree: int):
    """All degree-limited products of the atoms of p; used by tests."""
    atoms = sorted({k for m, _ in p.terms for k in m})
    return list(combinations_with_replacement(atoms, degree))
