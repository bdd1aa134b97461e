"""Weyl algebra with eRen coefficients.

W(s1) W(s2) = exp(-sigma(s1, s2)/2) W(s1 + s2),  W(s)* = W(-s),
sigma(s1, s2) = <s1, s2> - <s2, s1>.  The phase has modulus one whenever
sigma converges, since sigma is purely imaginary.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import erenfield as ef
from .erenfield import ERenElem, eren_add, eren_mul, eren_conj, eren_equal, exp_ren
from .fockstates import DressedState, apply_W, add_states, scale_state, zero_state, symplectic
from .renalg import ren_scale
from .symgrammar import Symbol, add, scale, to_text, zero

__all__ = ["WeylWord", "symplectic", "weyl_mul", "weyl_adjoint", "represent", "weyl", "identity"]


@dataclass(frozen=True)
class WeylWord:
    items: tuple = ()   # ((label Symbol, ERenElem), ...) sorted by label text
    d: int = 3

    @classmethod
    def build(cls, mapping, d):
        items = [(s, c) for s, c in mapping.items() if not c.is_zero]
        items.sort(key=lambda kv: to_text(kv[0]))
        return cls(tuple(items), d)

    def as_dict(self):
        return dict(self.items)

    def __str__(self):
        return " + ".join(f"({c})*W({to_text(s)})" for s, c in self.items) or "0"


def weyl(s: Symbol, coeff=None) -> WeylWord:
    c = coeff if coeff is not None else ef.one(s.d)
    return WeylWord.build({s: c}, s.d)


def identity(d: int) -> WeylWord:
    return weyl(zero(d))


def weyl_mul(w1: WeylWord, w2: WeylWord) -> WeylWord:
    acc = {}
    for s1, c1 in w1.items:
        for s2, c2 in w2.items:
            phase = exp_ren(ren_scale(-0.5, symplectic(s1, s2)))
            c = eren_mul(eren_mul(c1, c2), phase)
            lab = add(s1, s2)
            acc[lab] = eren_add(acc[lab], c) if lab in acc else c
    return WeylWord.build(acc, w1.d)


def weyl_adjoint(w: WeylWord) -> WeylWord:
    return WeylWord.build({scale(-1, s): eren_conj(c) for s, c in w.items}, w.d)


def weyl_equal(w1: WeylWord, w2: WeylWord):
    """Labelwise coefficient comparison; returns the weakest verdict."""
    from .renalg import SYMBOLIC, NOT_EQUAL
    a, b = w1.as_dict(), w2.as_dict()
    if set(a) != set(b):
        return NOT_EQUAL
    verdict = SYMBOLIC
    for k in a:
        v = eren_equal(a[k], b[k])
        if not v:
            return v
        if not v.symbolic:
            verdict = v
    return verdict


def represent(w: WeylWord, state: DressedState) -> DressedState:
    out = zero_state(state.d)
    for s, c in w.items:
        out = add_states(out, scale_state(c, apply_W(state, s)))
    return out
