"""Pullback of the dressed Yukawa Hamiltonian back to Fock space.

With s = -v/omega the formal Hamiltonian

    H = H0 + A^+(v) + A(v) - E_inf + dm

acting on W(s) W_1(phi) Psi pulls back to W(s)^* H W(s) = H~ with

    H~ = dGamma_x(theta_1) + dGamma_y(omega) + V(v* s).

The computation runs in three parts:

* A + E_inf, computed by the state engine;
* H0 + A^+, via the boson attachment bookkeeping (omega multisets);
* dm, via attachment detection on (sigma, alpha) expanded sector terms.

Every scalar produced on the way is recorded in a signed ledger whose
closure is decided on raw integrands (canonical-form equality).
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

from . import erenfield as ef
from .erenfield import eren_equal, eren_neg
from .fockstates import (
    BaseState, DressedState, NormalTerm, PotentialFactor, UnsupportedDressing, Word,
    ScalingViolation, add_states, apply_A, apply_Adagger_first, apply_Einfty, apply_H0,
    apply_potential, apply_W, apply_W1, coherent_exponent, dressing_of, make_coherent,
    potential, scale_state, _build, _accumulate,
)
from .erenfield import exp_ren, eren_mul
from .renalg import (
    RenInt, SYMBOLIC, NOT_EQUAL, EqVerdict, numeric, pair, ren_add, ren_scale, ren_sum,
    ren_equal, scalar as ren_scalar, normalize,
)
from .symgrammar import (
    Symbol, add, conjugate, multiply, parse_symbol, scale, scaling, to_text, zero, make_term,
)


class ResourceError(RuntimeError):
    pass


class DomainError(ValueError):
    pass


class IntertwiningError(AssertionError):
    pass


MAX_SECTOR_TERMS = 10_000


# ------------------------------------------------------------ model

@dataclass(frozen=True)
class ModelSpec:
    name: str
    d: int
    theta: Symbol
    omega: Symbol
    v: Symbol
    theta1: Symbol

    def __post_init__(self):
        for sym, nm in ((self.theta, "theta"), (self.omega, "omega"), (self.v, "v"),
                        (self.theta1, "theta1")):
            if sym.d != self.d:
                raise ValueError(f"{nm} lives in dimension {sym.d}, model in {self.d}")
        for sym, nm, allow0 in ((self.theta, "theta", True), (self.omega, "omega", False),
                                (self.v, "v", True)):
            if sym.is_zero:
                if not allow0:
                    raise ScalingViolation(f"{nm} must not vanish")
                continue
            rep = scaling(sym)
            if not rep.exact:
                raise ScalingViolation(f"{nm} = {to_text(sym)} does not scale exactly")
            if nm != "v" and (rep.beta < 0 or rep.m < 0):
                raise ScalingViolation(f"{nm} has negative scaling degree ({rep.beta}, {rep.m})")
        if len(self.omega.terms) != 1 or self.omega.terms[0].window is not None:
            raise ScalingViolation("omega must be a single unwindowed term for s = -v/omega")
        if len(self.v.terms) > 1:
            raise ScalingViolation("v must be a single term for s = -v/omega")

    @property
    def s(self) -> Symbol:
        return dressing_of(self.v, self.omega)

    @property
    def V_profile(self) -> Symbol:
        """v* s = -|v|^2 / omega."""
        return multiply(conjugate(self.v), self.s)

    def with_theta(self, theta: Symbol) -> "ModelSpec":
        return replace(self, theta=theta)

    @classmethod
    def from_strings(cls, name, d, theta, omega, v, theta1=None):
        d = int(d)
        th = parse_symbol(str(theta), d)
        th1 = th if theta1 is None else parse_symbol(str(theta1), d)
        return cls(name, d, th, parse_symbol(str(omega), d), parse_symbol(str(v), d), th1)

    def to_dict(self):
        return {"name": self.name, "d": self.d, "theta": to_text(self.theta),
                "omega": to_text(self.omega), "v": to_text(self.v),
                "theta1": to_text(self.theta1)}


# ------------------------------------------------------------ ledger

@dataclass(frozen=True)
class LedgerEntry:
    """One signed contribution.

    kind "scalar": integrand is the raw (un-normalized) integrand of a Ren_1
    scalar.  kind "potential": integrand is the profile of a V or V_1
    operator (tag says which).  kind "omega": tag names the boson class
    ("alpha0" / "alpha1") of an energy sum  sum_l omega(k_l).
    """
    source: str
    kind: str
    sign: int
    tag: str = ""
    integrand: Symbol | None = None

    @property
    def value(self) -> RenInt | None:
        if self.kind != "scalar":
            return None
        return ren_scale(self.sign, normalize(self.integrand))

    def to_dict(self):
        out = {"source": self.source, "kind": self.kind, "sign": self.sign, "tag": self.tag}
        if self.integrand is not None:
            out["integrand"] = to_text(self.integrand)
        if self.kind == "scalar":
            out["value"] = str(self.value)
        return out


def _scalar_entry(source, sign, a: Symbol, b: Symbol, weight=1):
    """Entry for sign * weight * <a, b>."""
    return LedgerEntry(source, "scalar", sign, "", scale(weight, multiply(conjugate(a), b)))


@dataclass(frozen=True)
class Ledger:
    entries: tuple = ()
    d: int = 3

    def __add__(self, other):
        return Ledger(self.entries + other.entries, self.d)

    def scalar_sum(self) -> Symbol:
        acc = zero(self.d)
        for e in self.entries:
            if e.kind == "scalar":
                acc = add(acc, scale(e.sign, e.integrand))
        return acc

    def potential_sums(self):
        acc = {}
        for e in self.entries:
            if e.kind == "potential":
                acc[e.tag] = add(acc.get(e.tag, zero(self.d)), scale(e.sign, e.integrand))
        return acc

    def omega_sums(self):
        acc = Counter()
        for e in self.entries:
            if e.kind == "omega":
                acc[e.tag] += e.sign
        return acc

    def closure(self, tol=1e-9) -> EqVerdict:
        """Do all contributions cancel?  Symbolic when the raw integrands
        cancel in canonical form; numeric when only normalized values do."""
        if any(c != 0 for c in self.omega_sums().values()):
            return NOT_EQUAL
        if any(not p.is_zero for p in self.potential_sums().values()):
            return NOT_EQUAL
        total = self.scalar_sum()
        if total.is_zero:
            return SYMBOLIC
        vals = [e.value for e in self.entries if e.kind == "scalar"]
        return ren_equal(ren_sum(vals, self.d), ren_scalar(0, self.d), tol)

    def to_dict(self):
        v = self.closure()
        return {"entries": [e.to_dict() for e in self.entries],
                "closure": v.kind, "closed": bool(v)}


@dataclass(frozen=True)
class Pulled:
    state: DressedState
    ledger: Ledger


# ------------------------------------------------------------ helpers

def residual_res1(v: Symbol, phi: Symbol | None, M: int = 2):
    """res_1(phi) = <v, phi> + V_1(v* phi) as (scalar, potential or None)."""
    if phi is None or phi.is_zero:
        return ren_scalar(0, v.d), None
    pot = potential("V_first", multiply(conjugate(v), phi), M)
    return pair(v, phi), (None if pot is None else PotentialFactor(pot[0].kind, scale(pot[1], pot[0].profile)))


def _shape(state: DressedState, s: Symbol):
    """Every word must be a bare W(s) W_1(phi) Psi with the model's s."""
    for w in state.words():
        if w.creations or w.potentials or w.markers or w.core:
            raise UnsupportedDressing(f"expected W(s) W1(phi) Psi, got {w.text()}")
        if w.s != s:
            got = "none" if w.s is None else to_text(w.s)
            raise UnsupportedDressing(f"dressing {got} differs from s = -v/omega = {to_text(s)}")


def undress(state: DressedState, s: Symbol) -> DressedState:
    """Left multiplication by W(s)^* = W(-s), also across inner markers."""
    plain = DressedState(tuple(kv for kv in state.items if not kv[0][0].core), state.d)
    out = apply_W(plain, scale(-1, s))
    acc = dict(out.items)
    for (w, mono), c in state.items:
        if not w.core:
            continue
        if w.markers or w.creations or w.potentials:
            raise UnsupportedDressing(f"cannot undress {w.text()}")
        M = w.base.M
        r_old = coherent_exponent(M, w.s, w.phi, state.d)
        r_new = coherent_exponent(M, None, w.phi, state.d)
        c2 = eren_mul(c, exp_ren(ren_add(r_old, ren_scale(-1, r_new))))
        nw = Word((), (), w.core, (), None, w.phi, w.base)
        _accumulate(acc, (nw, mono), c2)
    return _build(acc, state.d)


def _sub(a: DressedState, b: DressedState) -> DressedState:
    return add_states(a, scale_state(-1, b))


def state_residual(a: DressedState, b: DressedState, tol=1e-9) -> tuple:
    """(difference, verdict) for two states expected to coincide."""
    diff = _sub(a, b)
    if diff.is_zero:
        return diff, SYMBOLIC
    zero_c = ef.scalar(0, a.d)
    ok = all(eren_equal(c, zero_c, tol) for _, c in diff.items)
    # a numeric match requires each coefficient to be tiny relative to the inputs
    if ok:
        return diff, numeric(tol)
    return diff, NOT_EQUAL


def _words_phi(state):
    return sorted({(w.phi is None, "" if w.phi is None else to_text(w.phi)) for w in state.words()})


# ------------------------------------------------------------ partial pullbacks

def pullback_AE(model: ModelSpec, state: DressedState) -> Pulled:
    """W(s)^* (A(v) - E_inf) W(s) W_1(phi) Psi = (res_1(phi) + V(v* s)) W_1(phi) Psi."""
    s, v = model.s, model.v
    _shape(state, s)
    raw = add_states(apply_A(state, v), apply_Einfty(state, v, model.omega))
    out = undress(raw, s)
    entries = []
    Ms = sorted({w.base.M for w in state.words()})
    phis = {w.phi for w in state.words()}
    for M in Ms:
        entries.append(_scalar_entry(f"A on W(s) [M={M}]", +1, v, s, M))
        entries.append(_scalar_entry(f"E_inf [M={M}]", -1, v, s, M))
    for phi in sorted((p for p in phis if p is not None), key=to_text):
        entries.append(_scalar_entry("A on W1(phi): <v,phi>", +1, v, phi))
        if max(Ms) >= 2:
            entries.append(LedgerEntry("A on W1(phi): V1(v* phi)", "potential", +1, "V1",
                                       multiply(conjugate(v), phi)))
    return Pulled(out, Ledger(tuple(entries), model.d))


def expected_AE(model: ModelSpec, state: DressedState) -> DressedState:
    """Independent right-hand side (res_1(phi) + V(v* s)) W_1(phi) Psi."""
    s, v = model.s, model.v
    x = undress(state, s)
    out = apply_potential(x, "V_all", model.V_profile)
    for (w, mono), c in x.items:
        if w.phi is None:
            continue
        one = DressedState((((w, mono), c),), x.d)
        out = add_states(out, _scaled_by_renint(pair(v, w.phi), one))
        out = add_states(out, apply_potential(one, "V_first", multiply(conjugate(v), w.phi)))
    return out


def _scaled_by_renint(r: RenInt, st: DressedState) -> DressedState:
    from .fockstates import multiply_renint
    return multiply_renint(r, st)


def _omega_phi(omega, phi):
    return multiply(omega, phi)


def pullback_H0Adagger(model: ModelSpec, state: DressedState, experimental_general_theta=False) -> Pulled:
    """W(s)^* (H0 + A^+(v)) W(s) W_1(phi) Psi = (H0 - res_1(phi)) W_1(phi) Psi for theta = 0.

    Bookkeeping of boson energies, per boson l of W(s) W_1(phi) Psi:

    * [H0, W(s)] gives + sum over s-attached bosons (alpha = 0) of omega;
    * A^+(v) = -A^+(omega s) gives - sum over all bosons of omega, plus a
      creation A_1^+(omega phi) acting on the whole state;
    * the alpha = 1 remainder is W(s) A_1^+(omega phi) W_1(phi) Psi.

    Pulling A_1^+(omega phi) through W(s) leaves <s, omega phi> + V_1(s* omega phi).
    """
    s, omega = model.s, model.omega
    _shape(state, s)
    if not model.theta.is_zero and not experimental_general_theta:
        raise ValueError("pullback_H0Adagger needs theta = 0; pass experimental_general_theta "
                         "for the uncancelled energy-difference bookkeeping")
    x = undress(state, s)
    entries = [
        LedgerEntry("[H0, W(s)]", "omega", +1, "alpha0"),
        LedgerEntry("A+(v) = -A+(omega s)", "omega", -1, "alpha0"),
        LedgerEntry("A+(v) = -A+(omega s)", "omega", -1, "alpha1"),
        LedgerEntry("alpha1 energies as W(s) A1+(omega phi) W1(phi)", "omega", +1, "alpha1"),
    ]
    out = apply_H0(x, zero(model.d), omega)
    for (w, mono), c in state.items:
        if w.phi is None:
            continue
        u = _omega_phi(omega, w.phi)
        one = DressedState((((w, mono), c),), state.d)
        one_x = undress(one, s)
        # - W(s) A_1^+(omega phi) W_1(phi) Psi, pulled back
        out = add_states(out, scale_state(-1, apply_Adagger_first(one_x, u, compact=False)))
        # + A_1^+(omega phi) W(s) W_1(phi) Psi, pulled back by the engine
        out = add_states(out, undress(apply_Adagger_first(one, u, compact=False), s))
        entries.append(_scalar_entry("A1+(omega phi) through W(s)", +1, s, u))
        if w.base.M >= 2:
            entries.append(LedgerEntry("A1+(omega phi) through W(s): V1(s* omega phi)",
                                       "potential", +1, "V1", multiply(conjugate(s), u)))
    entries = _dedupe(entries)
    if not model.theta.is_zero:
        # general theta: energy differences E(P, K) - E(P_alpha, K_alpha) stay open
        out = add_states(out, _marker_state(x, f"dE[{to_text(model.theta)}]"))
        entries.append(LedgerEntry("theta(P) - theta(P_alpha) (no cancellation claimed)",
                                   "omega", +1, "energy_difference"))
    return Pulled(out, Ledger(tuple(entries), model.d))


def _dedupe(entries):
    seen, out = set(), []
    for e in entries:
        key = (e.source, e.kind, e.sign, e.tag, None if e.integrand is None else to_text(e.integrand))
        if key in seen:
            continue
        seen.add(key)
        out.append(e)
    return out


def _marker_state(x, mark):
    from .fockstates import apply_marker
    return apply_marker(x, mark)


def expected_H0Adagger(model: ModelSpec, state: DressedState) -> DressedState:
    """Independent right-hand side (H0 - res_1(phi)) W_1(phi) Psi."""
    s, v = model.s, model.v
    x = undress(state, s)
    out = apply_H0(x, zero(model.d), model.omega)
    for (w, mono), c in x.items:
        if w.phi is None:
            continue
        one = DressedState((((w, mono), c),), x.d)
        out = _sub(out, _scaled_by_renint(pair(v, w.phi), one))
        out = _sub(out, apply_potential(one, "V_first", multiply(conjugate(v), w.phi)))
    return out


# ------------------------------------------------------------ sector expansion

@dataclass(frozen=True)
class ExpandedTerm:
    """One (sigma, alpha) summand of W(s) W_1(phi) Psi in sector (M, N).

    factors[l] is "s", "phi", or "1" (s-factor removed by attachment
    detection).  pi records the partial map used for selection and energy
    the energy label  ((j, bosons moved onto fermion j), ...).
    """
    term: NormalTerm
    M: int
    N: int
    sigma: tuple
    alpha: tuple
    factors: tuple
    pi: tuple | None = None
    energy: tuple | None = None

    def label(self):
        return (self.sigma, self.alpha, self.factors, self.energy)


def _admissible(word: Word, j: int):
    """alpha values allowed for a boson attached to fermion j."""
    opts = []
    if word.s is not None:
        opts.append(0)
    if j == 1 and word.phi is not None:
        opts.append(1)
    return opts


def _check_term(term: NormalTerm, M: int):
    w = term.word
    if not w.dressed:
        raise ValueError("expansion needs a dressing W(s) and/or W_1(phi)")
    if w.creations or w.markers or w.core or w.potentials:
        raise UnsupportedDressing(f"expansion needs a bare W(s) W1(phi) Psi, got {w.text()}")
    if w.base.M != M:
        raise ValueError(f"sector M={M} does not match base with M={w.base.M}")


def expand_sigma_alpha(term: NormalTerm, M: int, N: int, max_terms: int = MAX_SECTOR_TERMS):
    _check_term(term, M)
    if M ** N * 2 ** N > max_terms:
        raise ResourceError(f"sector (M={M}, N={N}) needs up to {M ** N * 2 ** N} terms "
                            f"(limit {max_terms})")
    w = term.word
    out = []
    for sigma in itertools.product(range(1, M + 1), repeat=N):
        choices = [_admissible(w, j) for j in sigma]
        for alpha in itertools.product(*choices):
            factors = tuple("s" if a == 0 else "phi" for a in alpha)
            out.append(ExpandedTerm(term, M, N, sigma, tuple(alpha), factors))
    return out


def admissible_count(term: NormalTerm, M: int, N: int) -> int:
    """sum over sigma of prod_l #alpha(l): (M + 1)^N with both dressings."""
    w = term.word
    per_first = (w.s is not None) + (w.phi is not None)
    per_other = int(w.s is not None)
    return (per_first + (M - 1) * per_other) ** N


def recombine(expanded, term: NormalTerm, M: int, N: int) -> NormalTerm:
    """Inverse of expand_sigma_alpha: the summands must be exactly the
    admissible (sigma, alpha) set, each once."""
    labels = [(e.sigma, e.alpha) for e in expanded]
    if any(e.term != term or e.M != M or e.N != N for e in expanded):
        raise ValueError("summands belong to a different term or sector")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate summands")
    if len(labels) != admissible_count(term, M, N):
        raise ValueError(f"{len(labels)} summands, expected {admissible_count(term, M, N)}")
    for sigma, alpha in labels:
        for j, a in zip(sigma, alpha):
            if a not in _admissible(term.word, j):
                raise ValueError(f"inadmissible label sigma={sigma} alpha={alpha}")
    return term


# ------------------------------------------------------------ attachment detection

def _require_compact(e: ExpandedTerm):
    if not e.term.word.base.compact:
        raise DomainError("attachment detection needs a base state of compact support")


def alpha_jl(e: ExpandedTerm, j: int, l: int):
    """Symbolic |k_l| -> oo limit: keeps the term, minus its s(k_l) factor,
    iff boson l is s-attached to fermion j.  Bosons are numbered from 1."""
    _require_compact(e)
    if not 1 <= l <= e.N or not 1 <= j <= e.M:
        return None
    i = l - 1
    if e.sigma[i] != j or e.alpha[i] != 0 or e.factors[i] != "s":
        return None
    return replace(e, factors=e.factors[:i] + ("1",) + e.factors[i + 1:])


def _restore(e: ExpandedTerm, l: int) -> ExpandedTerm:
    i = l - 1
    return replace(e, factors=e.factors[:i] + ("s",) + e.factors[i + 1:])


def alpha_pi(e: ExpandedTerm, pi: dict):
    """prod_{l in L} s(k_l) alpha_{pi(l) l}  prod_{l not in L} prod_j (1 - s(k_l) alpha_{j l})."""
    _require_compact(e)
    cur = e
    for l in sorted(pi):
        r = alpha_jl(cur, pi[l], l)
        if r is None:
            return None
        cur = _restore(r, l)
    for l in range(1, e.N + 1):
        if l in pi:
            continue
        # (1 - s alpha_{jl}) applied for all j; at most one factor acts
        for j in range(1, e.M + 1):
            r = alpha_jl(cur, j, l)
            if r is not None:
                # cur - s(k_l) * r == cur - cur
                return None
    return replace(cur, pi=tuple(sorted(pi.items())))


def partial_maps(M: int, N: int):
    """All partial maps {1..N} -> {1..M}: (M + 1)^N of them."""
    for img in itertools.product(range(0, M + 1), repeat=N):
        yield {l + 1: j for l, j in enumerate(img) if j}


def _energy_label(M, moved):
    return tuple((j, tuple(sorted(l for l, jj in moved.items() if jj == j))) for j in range(1, M + 1))


def energy_text(label, theta1: Symbol) -> str:
    t = to_text(theta1)
    parts = []
    for j, ls in label:
        arg = " + ".join([f"p_{j}"] + [f"k_{l}" for l in ls])
        parts.append(f"theta1[{t}]({arg})")
    return " + ".join(parts)


def delta_m_sector(term: NormalTerm, M: int, N: int, theta1: Symbol, max_terms=MAX_SECTOR_TERMS):
    """dm W(s) W_1(phi) Psi in sector (M, N) as summands with energy labels."""
    if theta1.is_zero:
        return []
    out = []
    expanded = expand_sigma_alpha(term, M, N, max_terms)
    if len(expanded) * (M + 1) ** N > 50 * max_terms:
        raise ResourceError("attachment enumeration exceeds the sector budget")
    for e in expanded:
        for pi in partial_maps(M, N):
            r = alpha_pi(e, pi)
            if r is not None:
                out.append(replace(r, energy=_energy_label(M, pi)))
    return out


def intertwined_sector(term: NormalTerm, M: int, N: int, theta1: Symbol):
    """W(s) dGamma_x(theta_1) W_1(phi) Psi in sector (M, N), enumerated directly.

    W_1(phi) puts bosons K \\ S on fermion 1; dGamma_x(theta_1) weighs with
    sum_j theta_1 of the fermion momenta at that stage; W(s) then adds the
    bosons S with map sigma_S, shifting fermion sigma_S(l) by k_l.
    """
    _check_term(term, M)
    if theta1.is_zero:
        return []
    w = term.word
    out = []
    bosons = range(1, N + 1)
    for size in range(N + 1):
        for S in itertools.combinations(bosons, size):
            rest = [l for l in bosons if l not in S]
            if rest and w.phi is None:
                continue
            if S and w.s is None:
                continue
            for img in itertools.product(range(1, M + 1), repeat=len(S)):
                sig_s = dict(zip(S, img))
                sigma = tuple(sig_s.get(l, 1) for l in bosons)
                alpha = tuple(0 if l in sig_s else 1 for l in bosons)
                factors = tuple("s" if l in sig_s else "phi" for l in bosons)
                out.append(ExpandedTerm(term, M, N, sigma, alpha, factors,
                                        energy=_energy_label(M, sig_s)))
    return out


def check_intertwining(term: NormalTerm, theta1: Symbol, N_max: int = 3, M: int | None = None):
    """Term-multiset equality of dm W(s)Psi and W(s) dGamma_x(theta_1) Psi per sector.

    Returns a list of (M, N, n_terms, ok)."""
    M = term.word.base.M if M is None else M
    rows = []
    for N in range(N_max + 1):
        lhs = Counter(e.label() for e in delta_m_sector(term, M, N, theta1))
        rhs = Counter(e.label() for e in intertwined_sector(term, M, N, theta1))
        rows.append((M, N, sum(lhs.values()), lhs == rhs))
    return rows


def delta_m_apply(state: DressedState, theta1: Symbol, N_check: int = 3) -> DressedState:
    """dm on W(s) W_1(phi) Psi: the selected summands, weighted by
    E_1(P_pi), recombine to W(s) dGamma_x(theta_1) W_1(phi) Psi.

    The recombination is verified on sectors N <= N_check before the
    normal form is returned."""
    if theta1.is_zero:
        return DressedState((), state.d)
    acc = {}
    mark = f"dGx[{to_text(theta1)}]"
    checked = set()
    for (w, mono), c in state.items:
        if not w.base.compact:
            raise DomainError("dm needs a base state of compact support")
        if w not in checked:
            t = NormalTerm(c, None, w)
            for M, N, n, ok in check_intertwining(t, theta1, N_check):
                if not ok:
                    raise IntertwiningError(f"dm intertwining fails in sector (M={M}, N={N})")
            checked.add(w)
        nw = Word((), (), (), (mark,), w.s, w.phi, w.base)
        _accumulate(acc, (nw, mono), c)
    return _build(acc, state.d)


# ------------------------------------------------------------ full pullback

def fiber_hessian(theta1: Symbol):
    """Isotropic Hessian at p = 0 of the radial function theta_1(|p|), or
    None when theta_1 is not smooth there."""
    if theta1.is_zero:
        return 0.0
    h = 0.0
    for t in theta1.terms:
        if t.window is not None and t.window[0] > 0:
            continue
        if t.window is not None:
            return None
        pre = t.coeff
        for b, mu in t.mass:
            pre *= mu ** float(b)
        if t.a == 0:
            h += 2 * pre * sum(float(b) / (2 * mu * mu) for b, mu in t.mass)
        elif t.a == 2:
            h += 2 * pre
        elif t.a.denominator == 1 and t.a > 2 and t.a % 2 == 0:
            continue
        else:
            return None
    return complex(h).real if complex(h).imag == 0 else complex(h)


@dataclass(frozen=True)
class PulledHamiltonian:
    model: ModelSpec
    fermion_dispersion: Symbol
    boson_dispersion: Symbol
    potential: PotentialFactor
    residual: DressedState
    residual_verdict: EqVerdict
    scalar_ledger: Ledger
    delta_m_rows: tuple = ()
    fiber_hessian: object = None
    probes: tuple = field(default=(), compare=False)

    @property
    def residual_zero(self):
        return self.residual.is_zero

    @property
    def ledger_closed(self):
        return self.scalar_ledger.closure()

    @property
    def delta_m_ok(self):
        return all(r[3] for r in self.delta_m_rows)

    def describe(self):
        return (f"dGamma_x({to_text(self.fermion_dispersion)}) + "
                f"dGamma_y({to_text(self.boson_dispersion)}) + V({to_text(self.potential.profile)})")

    def to_dict(self):
        cl = self.ledger_closed
        return {
            "model": self.model.to_dict(),
            "hamiltonian": self.describe(),
            "fermion_dispersion": to_text(self.fermion_dispersion),
            "boson_dispersion": to_text(self.boson_dispersion),
            "potential_profile": to_text(self.potential.profile),
            "residual_zero": self.residual_zero,
            "residual_verdict": self.residual_verdict.kind,
            "residual": self.residual.dump(),
            "ledger": self.scalar_ledger.to_dict(),
            "ledger_closure": cl.kind,
            "delta_m": [{"M": M, "N": N, "terms": n, "ok": ok} for M, N, n, ok in self.delta_m_rows],
            "fiber_hessian": self.fiber_hessian,
            "probes": list(self.probes),
        }


def default_probes(d: int):
    phi = Symbol.build([make_term(0.5, 0, (), (1.0, 2.0))], d)
    out = []
    for M in (1, 2):
        base = BaseState("Psi", M, support_radius=1.0, avoids_collisions=True)
        out.append((base, None))
        out.append((base, phi))
    return out


def pullback_full(model: ModelSpec, probes=None, N_check: int = 3) -> PulledHamiltonian:
    """Compose the three pullbacks on probe states W(s) W_1(phi) Psi and
    compare with H~ = dGamma_x(theta_1) + dGamma_y(omega) + V(v* s)."""
    d = model.d
    s = model.s
    bare = model.with_theta(zero(d))
    probes = default_probes(d) if probes is None else probes
    ledger = Ledger((), d)
    residual = DressedState((), d)
    rows = []
    names = []
    for base, phi in probes:
        st = make_coherent(base, s, phi, d)
        ae = pullback_AE(bare, st)
        ha = pullback_H0Adagger(bare, st)
        dm = undress(delta_m_apply(st, model.theta1, N_check), s)
        total = add_states(add_states(ae.state, ha.state), dm)
        x = undress(st, s)
        expect = add_states(apply_H0(x, model.theta1, model.omega),
                            apply_potential(x, "V_all", model.V_profile))
        residual = add_states(residual, _sub(total, expect))
        ledger = ledger + ae.ledger + ha.ledger
        for t in st.terms:
            rows += check_intertwining(t, model.theta1, N_check) if not model.theta1.is_zero else []
        names.append(f"M={base.M}, phi={'0' if phi is None else to_text(phi)}")
    ledger = Ledger(tuple(_dedupe(list(ledger.entries))), d)
    _, verdict = (residual, SYMBOLIC) if residual.is_zero else state_residual(residual, DressedState((), d))
    return PulledHamiltonian(
        model=model,
        fermion_dispersion=model.theta1,
        boson_dispersion=model.omega,
        potential=PotentialFactor("V_all", model.V_profile),
        residual=residual,
        residual_verdict=verdict,
        scalar_ledger=ledger,
        delta_m_rows=tuple(rows),
        fiber_hessian=fiber_hessian(model.theta1),
        probes=tuple(names),
    )
