"""Alternative dressings: the IBC operator 1 + H0^-1 A^+ and the Glimm transform.

Both are built from the raising operator G = H0^-1 A^+(v), which maps boson
sector N into N + 1.  On a truncated Fock space every power series in G
terminates, so inverses and exponentials are exact sector by sector.

A SectorState carries amplitudes in one of two representations:

* symbolic: sector N holds {(k, n0): Fraction}, meaning c * G^k psi_{n0}
  with n0 + k = N (psi_{n0} the input component in sector n0);
* numeric: sector N holds a numpy vector; G is then supplied as blocks
  G[N] of shape (dim N+1, dim N).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .erenfield import exp_ren, ERenElem
from .renalg import (
    Radial, RenInt, from_radial, pair, ren_add, ren_scale, classify, term_radial, SERIES_TERMS,
)
from .renormalize import ModelSpec
from .symgrammar import Symbol, evaluate, to_text, conjugate, multiply


class DomainError(ValueError):
    pass


# ------------------------------------------------------------ sector states

@dataclass(frozen=True)
class SectorState:
    N_max: int
    amps: tuple                     # ((N, amplitude), ...) sorted by N
    symbolic: bool = True
    dropped: tuple = ()             # ((N, weight), ...) pushed beyond N_max
    terms_used: tuple = ()          # ((N, series terms), ...)

    def sector(self, N):
        for n, a in self.amps:
            if n == N:
                return a
        return {} if self.symbolic else None

    @property
    def sectors(self):
        return [n for n, _ in self.amps]

    def to_dict(self):
        if self.symbolic:
            amps = {str(n): {f"G^{k} psi_{n0}": str(c) for (k, n0), c in sorted(a.items())}
                    for n, a in self.amps}
        else:
            amps = {str(n): np.asarray(a).tolist() for n, a in self.amps}
        return {"N_max": self.N_max, "symbolic": self.symbolic, "amps": amps,
                "dropped": [list(x) for x in self.dropped],
                "terms_used": dict(self.terms_used)}


def symbolic_input(sectors, N_max: int) -> SectorState:
    """psi with components psi_n in the listed sectors."""
    amps = tuple((n, {(0, n): Fraction(1)}) for n in sorted(set(sectors)) if n <= N_max)
    return SectorState(N_max, amps, True)


def numeric_input(vectors: dict, N_max: int) -> SectorState:
    amps = tuple((n, np.asarray(v, dtype=complex)) for n, v in sorted(vectors.items()) if n <= N_max)
    return SectorState(N_max, amps, False)


def is_identity_symbolic(a: SectorState, b: SectorState) -> bool:
    """Exact equality of two symbolic states on every kept sector."""
    def clean(st):
        return {n: {k: c for k, c in amp.items() if c != 0} for n, amp in st.amps}
    ca, cb = clean(a), clean(b)
    keys = set(ca) | set(cb)
    return all(ca.get(n, {}) == cb.get(n, {}) for n in keys)


def sector_deviation(a: SectorState, b: SectorState) -> float:
    keys = set(a.sectors) | set(b.sectors)
    dev = 0.0
    for n in keys:
        x, y = a.sector(n), b.sector(n)
        if x is None:
            x = np.zeros_like(y)
        if y is None:
            y = np.zeros_like(x)
        dev = max(dev, float(np.linalg.norm(x - y)))
    return dev


# ------------------------------------------------------------ raising operator

def _theta_positive(theta: Symbol) -> bool:
    """inf theta > 0: theta(0+) > 0 and no sign change on a log grid."""
    if theta.is_zero:
        return False
    r = np.logspace(-8, 8, 801)
    vals = np.asarray(evaluate(theta, r))
    if np.any(np.abs(vals.imag) > 0) or np.any(vals.real <= 0):
        return False
    lead = min(t.ir_degree for t in theta.terms)
    return lead == 0


def _check_model(model: ModelSpec):
    if not _theta_positive(model.theta):
        raise DomainError(f"H0^-1 needs inf theta > 0; theta = {to_text(model.theta)}")


def _raise(state: SectorState, coeff, blocks=None) -> SectorState:
    """coeff * G state, truncated at N_max."""
    N_max = state.N_max
    out, dropped = {}, list(state.dropped)
    for n, amp in state.amps:
        if n + 1 > N_max:
            w = sum(abs(c) for c in amp.values()) if state.symbolic else float(np.linalg.norm(amp))
            if w:
                dropped.append((n + 1, float(w)))
            continue
        if state.symbolic:
            out[n + 1] = {(k + 1, n0): coeff * c for (k, n0), c in amp.items()}
        else:
            out[n + 1] = coeff * (blocks[n] @ amp)
    return SectorState(N_max, tuple(sorted(out.items())), state.symbolic, tuple(dropped),
                       state.terms_used)


def _add(a: SectorState, b: SectorState) -> SectorState:
    acc = {}
    for st in (a, b):
        for n, amp in st.amps:
            if st.symbolic:
                cur = acc.setdefault(n, {})
                for k, c in amp.items():
                    cur[k] = cur.get(k, 0) + c
            else:
                acc[n] = acc[n] + amp if n in acc else amp.copy()
    if a.symbolic:
        acc = {n: {k: c for k, c in amp.items() if c != 0} for n, amp in acc.items()}
    return SectorState(a.N_max, tuple(sorted(acc.items())), a.symbolic,
                       a.dropped + b.dropped, a.terms_used)


def _series(state: SectorState, coeffs, blocks=None) -> SectorState:
    """sum_k coeffs(k) G^k state; stops once every sector has been passed."""
    total = SectorState(state.N_max, (), state.symbolic)
    cur = state
    used = {}
    k = 0
    start = min(state.sectors, default=state.N_max + 1)
    while cur.amps:
        c = coeffs(k)
        if state.symbolic:
            term = SectorState(cur.N_max, tuple((n, {kk: c * v for kk, v in a.items()}) for n, a in cur.amps),
                               True)
        else:
            term = SectorState(cur.N_max, tuple((n, c * a) for n, a in cur.amps), False)
        total = _add(total, term)
        k += 1
        cur = _raise(cur, 1, blocks)
    for n in range(state.N_max + 1):
        if n >= start:
            used[n] = n - start + 1
    return SectorState(state.N_max, total.amps, state.symbolic, cur.dropped,
                       tuple(sorted(used.items())))


def _blocks(state, blocks):
    if not state.symbolic and blocks is None:
        raise ValueError("numeric sector states need the blocks of G = H0^-1 A^+")
    return blocks


def wibc_apply(state: SectorState, model: ModelSpec, blocks=None) -> SectorState:
    """(1 + H0^-1 A^+) state."""
    _check_model(model)
    _blocks(state, blocks)
    return _add(state, _raise(state, 1, blocks))


def wibc_inverse(state: SectorState, model: ModelSpec, blocks=None) -> SectorState:
    """Neumann series  sum_k (-H0^-1 A^+)^k, exact on sectors <= N_max."""
    _check_model(model)
    _blocks(state, blocks)
    return _series(state, lambda k: (-1) ** k, blocks)


# ------------------------------------------------------------ S*S + T

def _series_mul(a, b, keep, uv):
    acc = {}
    for p, x in a:
        for q, y in b:
            acc[p + q] = acc.get(p + q, 0) + x * y
    return _trim(acc, keep, uv)


def _trim(acc, keep, uv):
    items = sorted(((p, c) for p, c in acc.items() if c != 0), reverse=uv)
    return items[:keep]


def _series_inv(a, keep, uv):
    """1/f for f = sum c_i r^{p_i}, expanded around the leading term."""
    (p0, c0), rest = a[0], a[1:]
    u = [(p - p0, c / c0) for p, c in rest]
    out = {Fraction(0): 1.0}
    power = [(Fraction(0), 1.0)]
    for n in range(1, keep):
        power = _series_mul(power, [(p, -c) for p, c in u], keep, uv)
        if not power:
            break
        for p, c in power:
            out[p] = out.get(p, 0) + c
    return [(p - p0, c / c0) for p, c in _trim(out, keep, uv)]


def _sum_series(parts, keep, uv):
    acc = {}
    for s in parts:
        for p, c in s:
            acc[p] = acc.get(p, 0) + c
    return _trim(acc, keep, uv)


def _crossovers(series_list):
    lead = [s[0] for s in series_list if s]
    pts = []
    for i in range(len(lead)):
        for j in range(i + 1, len(lead)):
            (p, a), (q, b) = lead[i], lead[j]
            if p != q and a != 0 and b != 0:
                pts.append((abs(a) / abs(b)) ** (1 / float(q - p)))
    return pts


def contraction_integrand(model: ModelSpec, keep: int = 24) -> Radial:
    """|v|^2 / (theta + omega) at p = 0, as a radial integrand with expansions."""
    d = model.d
    parts = list(model.theta.terms) + list(model.omega.terms)
    if any(t.window is not None for t in parts + list(model.v.terms)):
        raise DomainError("contraction expansion needs unwindowed dispersions and form factor")
    vv = multiply(conjugate(model.v), model.v)
    rads = [term_radial(t, d, SERIES_TERMS) for t in parts]
    rv = [term_radial(t, d, SERIES_TERMS) for t in vv.terms]
    ir_den = _sum_series([r.ir for r in rads], keep, False)
    uv_den = _sum_series([r.uv for r in rads], keep, True)
    ir = _series_mul(_sum_series([r.ir for r in rv], keep, False), _series_inv(ir_den, keep, False), keep, False)
    uv = _series_mul(_sum_series([r.uv for r in rv], keep, True), _series_inv(uv_den, keep, True), keep, True)
    mus = [mu for t in parts + list(vv.terms) for _, mu in t.mass]
    scales = _crossovers([r.ir for r in rads]) + _crossovers([r.uv for r in rads]) + mus
    rho = min(scales, default=1.0) / 4
    R = 4 * max(scales, default=1.0)

    def f(r):
        return complex(evaluate(vv, r) / (evaluate(model.theta, r) + evaluate(model.omega, r)))

    return Radial(d, f, ir, uv, rho, R, breaks=tuple(sorted(set(scales))))


@dataclass(frozen=True)
class IBCRecord:
    model: str
    S_star_S: str
    T: str
    E: RenInt
    contraction: RenInt
    ledger: tuple = ()     # ((source, sign, RenInt), ...)

    @property
    def T_scalar(self) -> RenInt:
        out = ren_scale(0, self.E)
        for _, sign, r in self.ledger:
            out = ren_add(out, ren_scale(sign, r))
        return out

    def to_dict(self):
        return {
            "model": self.model,
            "S_star_S": self.S_star_S,
            "T": self.T,
            "E": self.E.to_dict(),
            "E_class": classify(self.E),
            "contraction": self.contraction.to_dict(),
            "ledger": [{"source": s, "sign": g, "value": r.to_dict()} for s, g, r in self.ledger],
            "T_scalar": str(self.T_scalar),
        }

    @classmethod
    def from_dict(cls, data, d):
        return cls(
            model=data["model"],
            S_star_S=data["S_star_S"],
            T=data["T"],
            E=RenInt.from_dict(data["E"], d),
            contraction=RenInt.from_dict(data["contraction"], d),
            ledger=tuple((e["source"], e["sign"], RenInt.from_dict(e["value"], d))
                         for e in data["ledger"]),
        )


def ibc_decompose(model: ModelSpec) -> IBCRecord:
    """H = S^* S + T with S = H0^{1/2} (1 + H0^-1 A^+) and T = -A H0^-1 A^+ - E.

    The vacuum contraction of -A H0^-1 A^+ is -<v, v/(theta + omega)>; E is
    chosen as its negative so that T carries no divergent scalar."""
    contr = from_radial(contraction_integrand(model))
    E = ren_scale(-1, contr)
    ledger = (
        ("-A H0^-1 A+ vacuum contraction", -1, contr),
        ("-E", -1, E),
    )
    th, om = to_text(model.theta), to_text(model.omega)
    return IBCRecord(
        model=model.name,
        S_star_S=f"S = H0^(1/2) (1 + H0^-1 A+(v)), H0 = dGx({th}) + dGy({om})",
        T=f"-A H0^-1 A+ [v = {to_text(model.v)}, contraction |v|^2/(theta+omega)] - E",
        E=E,
        contraction=contr,
        ledger=ledger,
    )


# ------------------------------------------------------------ Glimm

def glimm_lambda(model: ModelSpec) -> RenInt:
    """Lambda = <s, s> with s = -v/omega."""
    return pair(model.s, model.s)


@dataclass(frozen=True)
class GlimmResult:
    prefactor: ERenElem
    sectors: SectorState
    space_tag: str = "FBar"

    def to_dict(self):
        return {"prefactor": str(self.prefactor), "space": self.space_tag,
                "sectors": self.sectors.to_dict()}


def glimm_T_apply(state: SectorState, model: ModelSpec, blocks=None) -> GlimmResult:
    """T = e^{-Lambda/2} e^{-H0^-1 A^+}; the exponential terminates per sector."""
    _check_model(model)
    _blocks(state, blocks)
    if state.symbolic:
        coeffs = lambda k: Fraction((-1) ** k, math.factorial(k))
    else:
        coeffs = lambda k: (-1) ** k / math.factorial(k)
    out = _series(state, coeffs, blocks)
    return GlimmResult(exp_ren(ren_scale(-0.5, glimm_lambda(model))), out)


def glimm_T_inverse(res: GlimmResult, model: ModelSpec, blocks=None) -> SectorState:
    """e^{+H0^-1 A^+} on the sector part (the prefactor is left aside)."""
    st = res.sectors
    if st.symbolic:
        coeffs = lambda k: Fraction(1, math.factorial(k))
    else:
        coeffs = lambda k: 1 / math.factorial(k)
    return _series(SectorState(st.N_max, st.amps, st.symbolic), coeffs, blocks)


def ren_inner(x: GlimmResult, y: GlimmResult, model: ModelSpec, blocks) -> complex:
    """<T psi, T phi>_ren := <psi, phi>, computed from the images alone."""
    a = glimm_T_inverse(x, model, blocks)
    b = glimm_T_inverse(y, model, blocks)
    total = 0j
    for n in set(a.sectors) & set(b.sectors):
        total += complex(np.vdot(a.sector(n), b.sector(n)))
    return total
