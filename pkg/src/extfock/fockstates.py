"""Dressed states as eRen-linear combinations of normal-form operator words.

A normal word reads, left to right,

    markers . creations . potentials . F(s, phi, base)

where F(s, phi, base) = e^{r} W(s) W_1(phi) Psi_m is the unnormalized dressed
function and r is the coherent exponent (see ``coherent_exponent``).  Inner
operators (``core``) sit between W(s) and W_1(phi).  Creations are A_1^dagger
factors on the first fermion; potentials are V / V_1 multiplication operators,
which commute with every A, A^dagger and W for momentum-independent form
factors.

A state maps (word, monomial) -> ERenElem, the monomial being a product of
divergent integral atoms (see renalg.RenPoly).
"""
from __future__ import annotations

from dataclasses import dataclass

from . import erenfield as ef
from .erenfield import ERenElem, exp_ren, eren_add, eren_mul
from .renalg import (
    RenInt, RenPoly, pair, ren_add, ren_scale, same_class, is_convergent, classify,
    scalar as ren_scalar, poly_mul, poly_add, poly_scale,
)
from .symgrammar import Symbol, conjugate, multiply, reciprocal, scale, scaling, to_text, add


class NotL2Error(ValueError):
    pass


class ClassMismatchError(ValueError):
    pass


class UnsupportedDressing(ValueError):
    pass


class ScalingViolation(ValueError):
    pass


@dataclass(frozen=True)
class BaseState:
    label: str = "Psi"
    M: int = 1
    support_radius: float | None = None
    avoids_collisions: bool = False

    @property
    def compact(self):
        return self.support_radius is not None

    def __str__(self):
        return f"{self.label}[M={self.M}]"


@dataclass(frozen=True)
class PotentialFactor:
    kind: str        # "V_all" sums over j != j', "V_first" over pairs (1, j'), j' >= 2
    profile: Symbol

    def text(self):
        name = "V" if self.kind == "V_all" else "V1"
        return f"{name}({to_text(self.profile)})"


def _skey(sym):
    return "" if sym is None else to_text(sym)


@dataclass(frozen=True)
class Word:
    creations: tuple = ()     # ((1, u, compact), ...) sorted
    potentials: tuple = ()    # PotentialFactor, sorted
    markers: tuple = ()       # outer deferred operators (strings), leftmost first
    core: tuple = ()          # operators between W(s) and W_1(phi)
    s: Symbol | None = None
    phi: Symbol | None = None
    base: BaseState = BaseState()

    def text(self):
        parts = list(self.markers)
        parts += [f"A1+({to_text(u)})" for _, u, _ in self.creations]
        parts += [p.text() for p in self.potentials]
        if self.s is not None:
            parts.append(f"W({to_text(self.s)})")
        parts += list(self.core)
        if self.phi is not None:
            parts.append(f"W1({to_text(self.phi)})")
        parts.append(str(self.base))
        return " ".join(parts)

    @property
    def dressed(self):
        return self.s is not None or self.phi is not None


def _creations(items):
    return tuple(sorted(items, key=lambda c: (c[0], to_text(c[1]), c[2])))


def _potentials(items):
    return tuple(sorted(items, key=lambda p: (p.kind, to_text(p.profile))))


def potential(kind, profile: Symbol, M: int):
    """(factor, scalar) with V(profile) = scalar * V(factor.profile), or None
    when the operator vanishes (zero profile, or fewer than two fermions).

    Profiles are scaled to leading coefficient 1 so that V(f) and V(-f)
    land on the same word and cancel.
    """
    if profile.is_zero or M < 2:
        return None
    c = profile.terms[0].coeff
    return PotentialFactor(kind, scale(1 / c, profile)), c


@dataclass(frozen=True)
class NormalTerm:
    coeff: ERenElem
    ren_scalars: RenPoly
    word: Word

    def text(self):
        mono = "" if self.ren_scalars.is_scalar() else f"[{self.ren_scalars}] "
        return f"({self.coeff}) {mono}{self.word.text()}"


@dataclass(frozen=True)
class DressedState:
    items: tuple = ()   # (((word, monomial), ERenElem), ...) sorted by text
    d: int = 3

    FBAR = "FBar"
    FBAREX = "FBarEx"

    @property
    def space_tag(self):
        return self.FBAREX if any(len(m) > 0 for (_, m), _ in self.items) else self.FBAR

    @property
    def is_zero(self):
        return not self.items

    @property
    def terms(self):
        out = []
        for (word, mono), c in self.items:
            out.append(NormalTerm(c, RenPoly.build({mono: 1}, self.d), word))
        return out

    def words(self):
        return sorted({w for (w, _), _ in self.items}, key=lambda w: w.text())

    def coefficient(self, word, mono=()):
        for (w, m), c in self.items:
            if w == word and m == mono:
                return c
        return ef.scalar(0, self.d)

    def dump(self):
        return "\n".join(t.text() for t in self.terms) or "0"

    def __str__(self):
        return self.dump()


def _mono_text(mono):
    return repr(tuple((k, str(p)) for k, p in mono))


def _build(acc, d):
    items = [(k, c) for k, c in acc.items() if not c.is_zero]
    items.sort(key=lambda kv: (kv[0][0].text(), _mono_text(kv[0][1])))
    return DressedState(tuple(items), d)


def _accumulate(acc, key, c):
    if key in acc:
        acc[key] = eren_add(acc[key], c)
    else:
        acc[key] = c


def zero_state(d):
    return DressedState((), d)


def _with_poly(c: ERenElem, word: Word, poly: RenPoly, mono=()):
    """Entries for c * mono * poly * word."""
    base = RenPoly.build({mono: 1}, poly.d)
    out = {}
    for m, v in poly_mul(base, poly).terms:
        _accumulate(out, (word, m), eren_mul(c, ef.scalar(v, poly.d)))
    return out


def state_from_terms(entries, d):
    acc = {}
    for key, c in entries:
        _accumulate(acc, key, c)
    return _build(acc, d)


# ------------------------------------------------------------ exponents

def norm2(f: Symbol) -> RenInt:
    return pair(f, f)


def coherent_exponent(M: int, s: Symbol | None, phi: Symbol | None, d: int) -> RenInt:
    """r = M ||s||^2/2 + ||phi||^2/2 + <s, phi>.

    Equivalently (M-1)||s||^2/2 + i Im<s,phi> + ||s+phi||^2/2.
    """
    r = ren_scalar(0, d)
    if s is not None:
        r = ren_add(r, ren_scale(M / 2, norm2(s)))
    if phi is not None:
        r = ren_add(r, ren_scale(0.5, norm2(phi)))
    if s is not None and phi is not None:
        r = ren_add(r, pair(s, phi))
    return r


def symplectic(s1: Symbol, s2: Symbol) -> RenInt:
    return ren_add(pair(s1, s2), ren_scale(-1, pair(s2, s1)))


def _check_l2(phi):
    if phi is not None and not is_convergent(norm2(phi)):
        raise NotL2Error(f"<phi,phi> is {classify(norm2(phi))} for phi = {to_text(phi)}")


def make_coherent(base: BaseState, s: Symbol | None = None, phi: Symbol | None = None,
                  d: int | None = None) -> DressedState:
    if d is None:
        d = (s or phi).d if (s is not None or phi is not None) else 3
    s = None if s is not None and s.is_zero else s
    phi = None if phi is not None and phi.is_zero else phi
    _check_l2(phi)
    r = coherent_exponent(base.M, s, phi, d)
    c = exp_ren(ren_scale(-1, r))
    return _build({(Word(s=s, phi=phi, base=base), ()): c}, d)


def undressed(base: BaseState, d: int = 3) -> DressedState:
    return make_coherent(base, None, None, d)


def inner_coherent(phi1: Symbol, phi2: Symbol) -> ERenElem:
    r = ren_add(ren_scale(-0.5, ren_add(norm2(phi1), norm2(phi2))), pair(phi1, phi2))
    return exp_ren(r)


# ------------------------------------------------------------ state algebra

def add_states(a: DressedState, b: DressedState) -> DressedState:
    if a.d != b.d:
        raise ValueError("dimension mismatch")
    for wa in a.words():
        for wb in b.words():
            if wa.s is None or wa.s != wb.s or wa.phi == wb.phi or wa.base.M != wb.base.M:
                continue
            ra = coherent_exponent(wa.base.M, wa.s, wa.phi, a.d)
            rb = coherent_exponent(wb.base.M, wb.s, wb.phi, a.d)
            if not same_class(ra, rb):
                diff = ren_add(ra, ren_scale(-1, rb))
                raise ClassMismatchError(
                    f"dressed terms lie in different classes; exponent difference {diff} "
                    f"is {classify(diff)}")
    acc = dict(a.items)
    for key, c in b.items:
        _accumulate(acc, key, c)
    return _build(acc, a.d)


def scale_state(c, st: DressedState) -> DressedState:
    c = c if isinstance(c, ERenElem) else ef.scalar(c, st.d)
    return _build({k: eren_mul(c, v) for k, v in st.items}, st.d)


def multiply_renint(r: RenInt, st: DressedState) -> DressedState:
    poly = RenPoly.from_renint(r)
    acc = {}
    for (word, mono), c in st.items:
        for key, v in _with_poly(c, word, poly, mono).items():
            _accumulate(acc, key, v)
    return _build(acc, st.d)


def _map_terms(st: DressedState, fn) -> DressedState:
    """fn(word, mono, coeff) -> iterable of ((word, mono), coeff)."""
    acc = {}
    for (word, mono), c in st.items:
        for key, v in fn(word, mono, c):
            _accumulate(acc, key, v)
    return _build(acc, st.d)


# ------------------------------------------------------------ operators

def _check_dispersion(sym: Symbol, name: str, allow_zero=False):
    if sym.is_zero:
        if allow_zero:
            return
        raise ScalingViolation(f"{name} must not vanish")
    rep = scaling(sym)
    if not rep.exact:
        raise ScalingViolation(f"{name} = {to_text(sym)} does not scale exactly")
    if rep.beta < 0 or rep.m < 0:
        raise ScalingViolation(f"{name} = {to_text(sym)} has a pole (beta={rep.beta}, m={rep.m})")


def apply_H0(st: DressedState, theta: Symbol, omega: Symbol) -> DressedState:
    """H0 = dGamma_x(theta) + dGamma_y(omega), kept as deferred markers.

    On a bare base the boson part vanishes (boson vacuum) and so does the
    fermion part when theta = 0.
    """
    _check_dispersion(theta, "theta", allow_zero=True)
    _check_dispersion(omega, "omega")
    gx = f"dGx[{to_text(theta)}]"
    gy = f"dGy[{to_text(omega)}]"

    def fn(word, mono, c):
        bare = not word.dressed and not word.creations and not word.markers and not word.core
        out = []
        if not theta.is_zero:
            out.append(((_marked(word, gx), mono), c))
        if not bare:
            out.append(((_marked(word, gy), mono), c))
        return out

    return _map_terms(st, fn)


def _marked(word, mark):
    return Word(word.creations, word.potentials, (mark,) + word.markers, word.core,
                word.s, word.phi, word.base)


def apply_marker(st: DressedState, mark: str) -> DressedState:
    return _map_terms(st, lambda w, m, c: [((_marked(w, mark), m), c)])


def apply_potential(st: DressedState, kind: str, profile: Symbol) -> DressedState:
    """Multiply by V(profile) (kind V_all) or V_1(profile) (kind V_first)."""
    def fn(word, mono, c):
        pot = potential(kind, profile, word.base.M)
        if pot is None:
            return []
        w = Word(word.creations, _potentials(word.potentials + (pot[0],)), word.markers,
                 word.core, word.s, word.phi, word.base)
        return [((w, mono), eren_mul(c, ef.scalar(pot[1], c.d)))]

    return _map_terms(st, fn)


def _no_markers(word, op):
    if word.markers or word.core:
        raise UnsupportedDressing(f"{op} cannot be moved past deferred operators {word.markers + word.core}")


def _scalar_entries(word, mono, c, r: RenInt):
    return list(_with_poly(c, word, RenPoly.from_renint(r), mono).items())


def apply_A(st: DressedState, v: Symbol) -> DressedState:
    def fn(word, mono, c):
        _no_markers(word, "A")
        M = word.base.M
        out = []
        # commutators with creations left of the dressing
        for i, (j, u, comp) in enumerate(word.creations):
            rest = word.creations[:i] + word.creations[i + 1:]
            w0 = Word(rest, word.potentials, (), (), word.s, word.phi, word.base)
            out += _scalar_entries(w0, mono, c, pair(v, u))
            pot = potential("V_first", multiply(conjugate(v), u), M)
            if pot is not None:
                w1 = Word(rest, _potentials(word.potentials + (pot[0],)), (), (), word.s, word.phi, word.base)
                out.append(((w1, mono), eren_mul(c, ef.scalar(pot[1], c.d))))
        if word.s is not None:
            out += _scalar_entries(word, mono, c, ren_scale(M, pair(v, word.s)))
            pot = potential("V_all", multiply(conjugate(v), word.s), M)
            if pot is not None:
                w1 = Word(word.creations, _potentials(word.potentials + (pot[0],)), (), (),
                          word.s, word.phi, word.base)
                out.append(((w1, mono), eren_mul(c, ef.scalar(pot[1], c.d))))
        if word.phi is not None:
            out += _scalar_entries(word, mono, c, pair(v, word.phi))
            pot = potential("V_first", multiply(conjugate(v), word.phi), M)
            if pot is not None:
                w1 = Word(word.creations, _potentials(word.potentials + (pot[0],)), (), (),
                          word.s, word.phi, word.base)
                out.append(((w1, mono), eren_mul(c, ef.scalar(pot[1], c.d))))
        return out

    return _map_terms(st, fn)


def apply_Adagger_first(st: DressedState, u: Symbol, compact: bool | None = None) -> DressedState:
    if compact is None:
        compact = all(t.window is not None and t.window[1] < float("inf") for t in u.terms)

    def fn(word, mono, c):
        _no_markers(word, "A1+")
        if u.is_zero:
            return []
        w = Word(_creations(word.creations + ((1, u, compact),)), word.potentials, (), (),
                 word.s, word.phi, word.base)
        return [((w, mono), c)]

    return _map_terms(st, fn)


def dressing_of(v: Symbol, omega: Symbol) -> Symbol:
    """s = -v / omega."""
    return scale(-1, multiply(v, reciprocal(omega)))


def self_energy(M: int, v: Symbol, omega: Symbol) -> RenInt:
    """E = M <v, s> with s = -v/omega."""
    return ren_scale(M, pair(v, dressing_of(v, omega)))


def apply_Einfty(st: DressedState, v: Symbol, omega: Symbol) -> DressedState:
    """Multiply each term by -M<v,s>, the counterterm paired with apply_A."""
    s = dressing_of(v, omega)

    def fn(word, mono, c):
        M = word.base.M
        return _scalar_entries(word, mono, c, ren_scale(-M, pair(v, s)))

    return _map_terms(st, fn)


def _expand_creations(word, mono, c, label, with_v1):
    """Push a Weyl operator through the creation list.

    W(f) A_1^+(u) = (A_1^+(u) - <f,u> - V_1(f* u)) W(f); V_1 only for W(s).
    """
    M = word.base.M
    branches = [((), word.potentials, RenPoly.const(1, c.d))]
    for j, u, comp in word.creations:
        nxt = []
        for cre, pots, poly in branches:
            nxt.append((cre + ((j, u, comp),), pots, poly))
            nxt.append((cre, pots, poly_mul(poly, RenPoly.from_renint(ren_scale(-1, pair(label, u))))))
            if with_v1:
                pot = potential("V_first", scale(-1, multiply(conjugate(label), u)), M)
                if pot is not None:
                    nxt.append((cre, _potentials(pots + (pot[0],)), poly_scale(pot[1], poly)))
        branches = nxt
    return branches


def apply_W(st: DressedState, s_new: Symbol) -> DressedState:
    """Left action of the all-fermion dressing W(s_new)."""
    d = st.d
    if s_new.is_zero:
        return st

    def fn(word, mono, c):
        _no_markers(word, "W")
        M = word.base.M
        s_old = word.s
        if s_old is not None:
            sig = symplectic(s_new, s_old)
            prod = multiply(conjugate(s_new), s_old)
            if M >= 2 and prod != conjugate(prod):
                raise UnsupportedDressing("W(s') W(s) with complex s'* s on several fermions")
            phase = ren_scale(-M / 2, sig)
            s_tot = add(s_new, s_old)
        else:
            phase = ren_scalar(0, d)
            s_tot = s_new
        s_tot = None if s_tot.is_zero else s_tot
        r_old = coherent_exponent(M, s_old, word.phi, d)
        r_new = coherent_exponent(M, s_tot, word.phi, d)
        expo = ren_add(ren_add(r_old, phase), ren_scale(-1, r_new))
        c2 = eren_mul(c, exp_ren(expo))
        out = []
        for cre, pots, poly in _expand_creations(word, mono, c2, s_new, True):
            w = Word(_creations(cre), pots, (), (), s_tot, word.phi, word.base)
            out += list(_with_poly(c2, w, poly, mono).items())
        return out

    return _map_terms(st, fn)


def apply_W1(st: DressedState, phi_new: Symbol) -> DressedState:
    """Left action of the first-fermion dressing W_1(phi_new)."""
    d = st.d
    if phi_new.is_zero:
        return st
    _check_l2(phi_new)

    def fn(word, mono, c):
        _no_markers(word, "W1")
        M = word.base.M
        phase = ren_scalar(0, d)
        if word.s is not None:
            prod = multiply(conjugate(word.s), phi_new)
            if M == 1:
                # W(a) W(b) = e^{-sigma(a,b)} W(b) W(a)
                phase = ren_add(phase, ren_scale(-1, symplectic(phi_new, word.s)))
            elif prod != conjugate(prod):
                raise UnsupportedDressing("W_1(phi) past W(s) needs a real profile s* phi")
        if word.phi is not None:
            phase = ren_add(phase, ren_scale(-0.5, symplectic(phi_new, word.phi)))
            phi_tot = add(phi_new, word.phi)
        else:
            phi_tot = phi_new
        phi_tot = None if phi_tot.is_zero else phi_tot
        r_old = coherent_exponent(M, word.s, word.phi, d)
        r_new = coherent_exponent(M, word.s, phi_tot, d)
        c2 = eren_mul(c, exp_ren(ren_add(ren_add(r_old, phase), ren_scale(-1, r_new))))
        out = []
        for cre, pots, poly in _expand_creations(word, mono, c2, phi_new, False):
            w = Word(_creations(cre), pots, (), (), word.s, phi_tot, word.base)
            out += list(_with_poly(c2, w, poly, mono).items())
        return out

    return _map_terms(st, fn)


def divergent_scalars(st: DressedState):
    """Monomials of positive degree present in the state."""
    return sorted({m for (_, m), _ in st.items if m}, key=_mono_text)
