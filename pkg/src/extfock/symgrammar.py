"""Radial momentum-space symbols.

A symbol is a finite sum of terms

    c * |k|^a * prod_i (|k|^2 + mu_i^2)^(b_i/2) * 1[sigma <= |k| <= Lambda]

with rational exponents a, b_i.  Everything here is immutable and exact in
the exponents, so scaling-degree comparisons never touch floating point.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np

INF = math.inf


class GrammarError(ValueError):
    """Malformed expression text."""

    def __init__(self, msg, pos=None):
        self.pos = pos
        if pos is not None:
            msg = f"{msg} (at position {pos})"
        super().__init__(msg)


class UnsupportedInverse(ValueError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _window_key(w):
    if w is None:
        return (0, 0.0, 0.0)
    return (1, w[0], w[1])


@dataclass(frozen=True)
class SymTerm:
    coeff: complex
    a: Fraction = Fraction(0)
    mass: tuple = ()          # sorted ((b, mu), ...), mu > 0, b != 0
    window: tuple | None = None  # (sigma, Lambda) with sigma < Lambda

    @property
    def signature(self):
        return (self.a, self.mass, _window_key(self.window))

    @property
    def ir_degree(self):
        if self.window is not None and self.window[0] > 0:
            return INF
        return self.a

    @property
    def uv_degree(self):
        if self.window is not None and self.window[1] < INF:
            return -INF
        return self.a + sum((b for b, _ in self.mass), Fraction(0))

    def eval(self, r):
        r = np.asarray(r, dtype=float)
        out = self.coeff * r ** float(self.a)
        for b, mu in self.mass:
            out = out * (r * r + mu * mu) ** (float(b) / 2)
        if self.window is not None:
            lo, hi = self.window
            out = np.where((r >= lo) & (r <= hi), out, 0.0)
        return out


def _norm_mass(factors):
    acc = {}
    for b, mu in factors:
        if mu <= 0 or not math.isfinite(mu):
            raise GrammarError(f"mass parameter must be positive and finite, got {mu}")
        acc[mu] = acc.get(mu, Fraction(0)) + _frac(b)
    return tuple(sorted((b, mu) for mu, b in acc.items() if b != 0))


def _meet(w1, w2):
    if w1 is None:
        return w2
    if w2 is None:
        return w1
    return (max(w1[0], w2[0]), min(w1[1], w2[1]))


def _norm_window(w):
    if w is None:
        return None, True
    lo, hi = float(w[0]), float(w[1])
    if lo < 0:
        raise GrammarError("window lower edge must be >= 0")
    if not lo < hi:
        return None, False
    if lo == 0 and hi == INF:
        return None, True
    return (lo, hi), True


def make_term(coeff=1.0, a=0, mass=(), window=None):
    """Build a normalized term, or None if it is identically zero."""
    w, ok = _norm_window(window)
    if not ok or coeff == 0:
        return None
    return SymTerm(complex(coeff), _frac(a), _norm_mass(mass), w)


def _canon(terms: Iterable[SymTerm]):
    acc = {}
    order = {}
    for t in terms:
        if t is None:
            continue
        key = t.signature
        if key in acc:
            acc[key] = acc[key] + t.coeff
        else:
            acc[key] = t.coeff
            order[key] = t
    out = []
    for key in sorted(acc):
        c = acc[key]
        if c == 0:
            continue
        t = order[key]
        out.append(SymTerm(complex(c), t.a, t.mass, t.window))
    return tuple(out)


@dataclass(frozen=True)
class Symbol:
    terms: tuple = ()
    d: int = 3

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")

    @classmethod
    def build(cls, terms, d):
        return cls(_canon(terms), d)

    @property
    def is_zero(self):
        return not self.terms

    def __call__(self, r):
        return evaluate(self, r)

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, Symbol):
            return multiply(self, other)
        return scale(other, self)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(-1, self)

    def __sub__(self, other):
        return add(self, scale(-1, other))

    def __str__(self):
        return to_text(self)


def zero(d: int) -> Symbol:
    return Symbol((), d)


def const(c, d: int) -> Symbol:
    return Symbol.build([make_term(c)], d)


def power(a, d: int, coeff=1.0) -> Symbol:
    return Symbol.build([make_term(coeff, a)], d)


def _check_d(s, t):
    if s.d != t.d:
        raise ValueError(f"dimension mismatch: {s.d} vs {t.d}")


def add(s: Symbol, t: Symbol) -> Symbol:
    _check_d(s, t)
    return Symbol.build(s.terms + t.terms, s.d)


def scale(c, s: Symbol) -> Symbol:
    c = complex(c)
    return Symbol.build([SymTerm(t.coeff * c, t.a, t.mass, t.window) for t in s.terms], s.d)


def _mul_terms(t: SymTerm, u: SymTerm):
    w, ok = _norm_window(_meet(t.window, u.window))
    if not ok:
        return None
    return SymTerm(t.coeff * u.coeff, t.a + u.a, _norm_mass(t.mass + u.mass), w)


def multiply(s: Symbol, t: Symbol) -> Symbol:
    _check_d(s, t)
    return Symbol.build([_mul_terms(x, y) for x in s.terms for y in t.terms], s.d)


def conjugate(s: Symbol) -> Symbol:
    return Symbol(tuple(SymTerm(t.coeff.conjugate(), t.a, t.mass, t.window) for t in s.terms), s.d)


def reciprocal(s: Symbol) -> Symbol:
    if len(s.terms) != 1:
        raise UnsupportedInverse(f"inverse of a {len(s.terms)}-term symbol is not in the grammar")
    (t,) = s.terms
    if t.window is not None:
        raise UnsupportedInverse("inverse of a windowed symbol vanishes nowhere only inside the window")
    return Symbol((SymTerm(1 / t.coeff, -t.a, tuple((-b, mu) for b, mu in t.mass), None),), s.d)


def evaluate(sym: Symbol, r):
    """Pointwise value at |k| = r (scalar or array)."""
    if np.any(np.asarray(r) <= 0):
        raise ValueError("radial evaluation requires r > 0")
    if not sym.terms:
        return np.zeros_like(np.asarray(r, dtype=float)) + 0j if np.ndim(r) else 0j
    out = sum(t.eval(r) for t in sym.terms)
    if np.ndim(out) == 0:
        return complex(out)
    return np.asarray(out, dtype=complex)


# ---------------------------------------------------------------- scaling

@dataclass(frozen=True)
class ScalingReport:
    beta: object   # Fraction or +-inf
    m: object
    exact: bool
    eps_low: float | None = field(default=None, compare=False)
    eps_high: float | None = field(default=None, compare=False)
    c_low: tuple | None = field(default=None, compare=False)   # (c, C) for r < eps_low
    c_high: tuple | None = field(default=None, compare=False)  # (c, C) for r > eps_high


def _leading(sym, which):
    if which == "uv":
        deg = max(t.uv_degree for t in sym.terms)
        lead = sum(t.coeff for t in sym.terms if t.uv_degree == deg)
    else:
        deg = min(t.ir_degree for t in sym.terms)
        lead = sum(t.coeff * math.prod(mu ** float(b) for b, mu in t.mass)
                   for t in sym.terms if t.ir_degree == deg)
    return deg, lead


def _witness(sym, deg, lead, which):
    lo, hi = abs(lead) / 2, 2 * abs(lead)
    if which == "uv":
        grid = [2.0 ** j for j in range(0, 80)]
    else:
        grid = [2.0 ** -j for j in range(0, 80)]
    good = None
    # smallest scale after which every sampled ratio stays inside [lo, hi]
    for j in range(len(grid) - 1, -1, -1):
        r = grid[j]
        ratio = abs(evaluate(sym, r)) / r ** float(deg)
        if not lo <= ratio <= hi:
            break
        good = r
    return good, (lo, hi)


def scaling(sym: Symbol) -> ScalingReport:
    if sym.is_zero:
        raise ValueError("scaling of the zero symbol is undefined")
    beta = min(t.ir_degree for t in sym.terms)
    m = max(t.uv_degree for t in sym.terms)
    windowed = any(t.window is not None for t in sym.terms)
    nonneg = all(t.coeff.imag == 0 and t.coeff.real > 0 for t in sym.terms)
    exact = not windowed and (len(sym.terms) == 1 or nonneg)
    if not exact:
        return ScalingReport(beta, m, False)
    deg_hi, lead_hi = _leading(sym, "uv")
    deg_lo, lead_lo = _leading(sym, "ir")
    eh, ch = _witness(sym, deg_hi, lead_hi, "uv")
    el, cl = _witness(sym, deg_lo, lead_lo, "ir")
    return ScalingReport(beta, m, True, el, eh, cl, ch)


# ------------------------------------------------------------ text form

def _num_text(x: float) -> str:
    return repr(float(x))


def _coeff_text(c: complex) -> str:
    if c.imag == 0:
        return _num_text(c.real)
    im = repr(c.imag)
    sign = "" if im.startswith("-") else "+"
    return f"({_num_text(c.real)}{sign}{im}j)"


def _q_text(q: Fraction) -> str:
    return str(q)


def term_text(t: SymTerm) -> str:
    parts = [_coeff_text(t.coeff)]
    if t.a != 0:
        parts.append(f"pow({_q_text(t.a)})")
    for b, mu in t.mass:
        parts.append(f"masspow({_q_text(b)},{_num_text(mu)})")
    if t.window is not None:
        parts.append(f"window({_num_text(t.window[0])},{_num_text(t.window[1])})")
    return "*".join(parts)


def to_text(sym: Symbol) -> str:
    if sym.is_zero:
        return "0"
    return " + ".join(term_text(t) for t in sym.terms)


_TOKEN = re.compile(r"""
    (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)
  | (?P<name>[A-Za-z_]+)
  | (?P<op>[-+*/(),])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(text):
    pos, toks = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise GrammarError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, d):
        self.toks = _tokenize(text)
        self.i = 0
        self.d = d

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None, kind=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            raise GrammarError(f"expected {value!r}, got {tok[1] or 'end of input'!r}", tok[2])
        if kind is not None and tok[0] != kind:
            raise GrammarError(f"expected {kind}, got {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def parse(self):
        out = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise GrammarError(f"trailing input {tok[1]!r}", tok[2])
        return out

    def expr(self):
        out = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            out = add(out, rhs if op == "+" else scale(-1, rhs))
        return out

    def term(self):
        out = self.factor()
        while self.peek()[1] == "*":
            self.take()
            out = multiply(out, self.factor())
        return out

    def rational(self):
        neg = False
        while self.peek()[1] in ("-", "+"):
            neg ^= self.take()[1] == "-"
        kind, text, pos = self.take(kind="num")
        if text.endswith("j"):
            raise GrammarError("exponent must be real", pos)
        q = Fraction(text)
        if self.peek()[1] == "/":
            self.take()
            _, den, dpos = self.take(kind="num")
            if den.endswith("j") or Fraction(den) == 0:
                raise GrammarError("bad denominator", dpos)
            q = q / Fraction(den)
        return -q if neg else q

    def real(self, allow_inf=False):
        neg = False
        while self.peek()[1] in ("-", "+"):
            neg ^= self.take()[1] == "-"
        kind, text, pos = self.peek()
        if kind == "name" and text == "inf" and allow_inf:
            self.take()
            return -INF if neg else INF
        self.take(kind="num")
        if text.endswith("j"):
            raise GrammarError("parameter must be real", pos)
        x = float(text)
        if self.peek()[1] == "/":
            self.take()
            _, den, _ = self.take(kind="num")
            x = float(Fraction(text) / Fraction(den))
        return -x if neg else x

    def factor(self):
        kind, text, pos = self.peek()
        if text == "-":
            self.take()
            return scale(-1, self.factor())
        if text == "+":
            self.take()
            return self.factor()
        if kind == "num":
            self.take()
            val = complex(text) if text.endswith("j") else float(text)
            return const(val, self.d) if val != 0 else zero(self.d)
        if text == "(":
            self.take()
            out = self.expr()
            self.take(")")
            return out
        if kind == "name":
            self.take()
            self.take("(")
            if text == "pow":
                a = self.rational()
                out = power(a, self.d)
            elif text == "masspow":
                b = self.rational()
                self.take(",")
                mu = self.real()
                if mu == 0:
                    out = power(b, self.d)
                elif mu < 0:
                    raise GrammarError("mass must be positive", pos)
                else:
                    out = Symbol.build([make_term(1.0, 0, [(b, mu)])], self.d)
            elif text == "window":
                lo = self.real()
                self.take(",")
                hi = self.real(allow_inf=True)
                if lo < 0 or not lo < hi:
                    raise GrammarError("window needs 0 <= sigma < Lambda", pos)
                out = Symbol.build([make_term(1.0, 0, (), (lo, hi))], self.d)
            elif text == "conj":
                out = conjugate(self.expr())
            elif text == "inv":
                inner = self.expr()
                try:
                    out = reciprocal(inner)
                except UnsupportedInverse as exc:
                    raise GrammarError(str(exc), pos) from None
            elif text == "inf":
                raise GrammarError("inf only allowed as a window edge", pos)
            else:
                raise GrammarError(f"unknown function {text!r}", pos)
            self.take(")")
            return out
        raise GrammarError(f"unexpected token {text or 'end of input'!r}", pos)


def parse_symbol(text: str, d: int = 3) -> Symbol:
    return _Parser(text, d).parse()
