"""Numerical checks at cutoff.  Each returns a Report."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .. import altdress
from ..renalg import evaluate_convergent, pair
from ..renormalize import ModelSpec
from ..symgrammar import Symbol, make_term, multiply, conjugate, to_text, scale, parse_symbol
from .fock import FockSpace, GridSpec, Lattice, apply_exp, build_ops, padding, weyl_bound

TOL_IDENTITY = 1e-8
TOL_PULLBACK = 1e-6
TOL_EXACT = 1e-12


@dataclass
class Report:
    check: str
    params: dict
    deviation: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(self.deviation < self.tolerance)

    def to_dict(self):
        return {"check": self.check, "params": self.params, "deviation": float(self.deviation),
                "tolerance": self.tolerance, "pass": self.passed, "details": self.details}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def _opnorm(mat):
    if mat.size == 0:
        return 0.0
    return float(np.linalg.norm(mat, 2))


def random_windowed(rng, grid: GridSpec, target_norm: float, complex_coeff=True) -> Symbol:
    """One or two windowed power terms inside [sigma, Lambda], rescaled to
    the requested grid norm."""
    lo, hi = grid.sigma, grid.Lambda
    terms = []
    for _ in range(int(rng.integers(1, 3))):
        a, b = np.sort(rng.uniform(lo, hi, 2))
        if b - a < 0.05 * (hi - lo):
            a, b = lo, hi
        c = complex(rng.normal(), rng.normal() if complex_coeff else 0.0)
        expo = int(rng.integers(-2, 3))
        terms.append(make_term(c, expo, (), (round(float(a), 6), round(float(b), 6))))
    sym = Symbol.build(terms, grid.d)
    n = grid.norm(sym)
    if n == 0:
        return random_windowed(rng, grid, target_norm, complex_coeff)
    return scale(target_norm / n, sym)


# ------------------------------------------------------------ overlap

def _coherent(grid, phi, N_trunc=None):
    ops = build_ops(grid, phi, N_trunc=N_trunc)
    return ops.space, ops.W(ops.space.vacuum())


def overlap_formula(grid, phi1, phi2):
    return np.exp(-(grid.norm(phi1) ** 2 + grid.norm(phi2) ** 2) / 2 + grid.inner(phi1, phi2))


def check_overlap(phi1: Symbol, phi2: Symbol, grid: GridSpec, tol=TOL_IDENTITY) -> Report:
    """<Psi(phi1), Psi(phi2)> from W(phi) Omega against the closed formula."""
    n1, n2 = grid.norm(phi1), grid.norm(phi2)
    if max(n1, n2) > 0.5 + 1e-12:
        raise ValueError("overlap check needs ||phi|| <= 0.5")
    space, psi1 = _coherent(grid, phi1)
    _, psi2 = _coherent(grid, phi2)
    num = complex(np.vdot(psi1, psi2))
    ref = overlap_formula(grid, phi1, phi2)
    return Report("overlap", {"phi1": to_text(phi1), "phi2": to_text(phi2), "grid": grid.to_dict()},
                  abs(num - ref), tol, {"numeric": _c(num), "formula": _c(ref)})


def check_sector_distribution(phi: Symbol, grid: GridSpec, tol=TOL_IDENTITY) -> Report:
    """||P_N Psi(phi)||^2 against the Poisson weights; the alternative
    exponent e^{-||phi||} is reported alongside for comparison."""
    space, psi = _coherent(grid, phi)
    probs = space.sector_norms(psi) ** 2
    x = grid.norm(phi) ** 2
    Ns = np.arange(space.N + 1)
    fact = np.array([math.factorial(int(n)) for n in Ns], dtype=float)
    sq = np.exp(-x) * x ** Ns / fact
    lin = np.exp(-math.sqrt(x)) * x ** Ns / fact
    dev = float(np.max(np.abs(probs - sq)))
    return Report("sector_distribution", {"phi": to_text(phi), "grid": grid.to_dict()}, dev, tol,
                  {"norm": math.sqrt(x), "exp_minus_norm_squared": dev,
                   "exp_minus_norm": float(np.max(np.abs(probs - lin)))})


def truncation_scan(phi1, phi2, grid, n_values=(4, 6, 8, 10)):
    """Overlap deviation as a function of N_max."""
    return [(n, check_overlap(phi1, phi2, grid.with_N(n)).deviation) for n in n_values]


def check_overlap_random(grid: GridSpec, pairs=20, seed=0, tol=TOL_IDENTITY) -> Report:
    rng = np.random.default_rng(seed)
    worst, rows = 0.0, []
    for _ in range(pairs):
        p1 = random_windowed(rng, grid, float(rng.uniform(0.05, 0.5)))
        p2 = random_windowed(rng, grid, float(rng.uniform(0.05, 0.5)))
        r = check_overlap(p1, p2, grid, tol)
        rows.append(r.deviation)
        worst = max(worst, r.deviation)
    p = random_windowed(rng, grid, 0.5)
    dist = check_sector_distribution(p, grid, tol)
    scan = truncation_scan(p, random_windowed(rng, grid, 0.5), grid)
    devs = [d for _, d in scan]
    monotone = all(b < a for a, b in zip(devs, devs[1:]))
    dev = max(worst, dist.deviation)
    if not monotone:
        dev = math.inf
    return Report("overlap", {"pairs": pairs, "seed": seed, "grid": grid.to_dict()}, dev, tol,
                  {"pair_deviations": rows, "sector_distribution": dist.to_dict(),
                   "truncation_scan": [[n, d] for n, d in scan], "monotone": monotone})


# ------------------------------------------------------------ pull-through

def check_pullthrough(phi: Symbol, phip: Symbol, grid: GridSpec, tol=TOL_IDENTITY) -> Report:
    """[a^+(phi), W(phi')] - <phi', phi> W(phi') on sectors <= N_max - 2.

    Operators live on a space padded past N_max so that the truncation edge
    does not feed back into the measured sectors."""
    pad = padding(grid.norm(phip), grid.N_max, tol * 1e-2)
    ops = build_ops(grid, phip, N_trunc=grid.N_max + pad)
    sp_ = ops.space
    ad = sp_.creation(phi)
    low = sp_.low(grid.N_max - 2)
    E = np.zeros((sp_.D, len(low)), dtype=complex)
    E[low, np.arange(len(low))] = 1.0
    WE = ops.W(E)
    comm = ad @ WE - ops.W(ad @ E)
    c = grid.inner(phip, phi)
    dev = _opnorm(comm - c * WE)
    edge = float(np.max(np.abs(WE[sp_.off[sp_.N]:, :]))) if len(low) else 0.0
    return Report("pullthrough", {"phi": to_text(phi), "phi_prime": to_text(phip),
                                  "grid": grid.to_dict(), "padding": pad},
                  dev, tol, {"scalar": _c(c), "edge_amplitude": edge})


# ------------------------------------------------------------ commutator with V

def default_lattice(M, N_max=5):
    return Lattice(L=7, offsets=(-2, -1, 1, 2), dk=0.5, M=M, N_max=N_max)


def check_commutatorV(phi: Symbol, phip: Symbol, lattice: Lattice, tol=TOL_IDENTITY) -> Report:
    """[A^+(phi), A(phi')] + M <phi', phi> + V(conj(phi') phi) on sectors <= N_max - 2,
    with V assembled directly from fermion momentum exchanges."""
    Ad = lattice.A_dag(phi)
    A = lattice.A(phip)
    comm = (Ad @ A - A @ Ad).tocsr()
    c = lattice.grid.inner(phip, phi)
    h = multiply(conjugate(phip), phi)
    V = lattice.V(h)
    low = lattice.low(lattice.grid.N_max - 2)
    R = (comm + lattice.M * c * _eye(lattice.D) + V)[:, low]
    dev = float(np.abs(R.toarray()).max()) if R.nnz else 0.0
    vnorm = float(np.abs(V.toarray()).max()) if V.nnz else 0.0
    return Report("commutatorV", {"phi": to_text(phi), "phi_prime": to_text(phip), "M": lattice.M,
                                  "L": lattice.L, "offsets": list(lattice.offsets), "dk": lattice.dk,
                                  "N_max": lattice.grid.N_max},
                  dev, tol, {"scalar": _c(c), "V_max_entry": vnorm, "V_present": lattice.M > 1})


def _eye(n):
    import scipy.sparse as sp
    return sp.identity(n, dtype=complex, format="csr")


# ------------------------------------------------------------ pullback

def _windowed(sym: Symbol, grid: GridSpec) -> Symbol:
    return multiply(sym, parse_symbol(f"window({grid.sigma!r}, {grid.Lambda!r})", sym.d))


def self_energy_crosscheck(model: ModelSpec, grid: GridSpec, nodes=400, M=1) -> dict:
    """M <v, s> on a fine grid against the closed form of the windowed pair."""
    fine = GridSpec.log_gauss(grid.d, nodes if grid.d > 1 else 2 * nodes, grid.sigma, grid.Lambda, 0)
    num = M * fine.inner(model.v, model.s)
    ref = M * evaluate_convergent(pair(_windowed(model.v, grid), _windowed(model.s, grid)))
    return {"quadrature": _c(num), "closed_form": _c(ref), "deviation": abs(num - ref)}


def check_pullback(model: ModelSpec, grid: GridSpec, tol=TOL_PULLBACK) -> Report:
    """W(s)^* (H0 + A^+(v) + A(v) - E) W(s) - H0 for one fermion with theta = 0;
    the grid supplies the window.  V is absent for M = 1."""
    if not model.theta.is_zero:
        raise ValueError("the cutoff pullback check takes theta = 0")
    s = model.s
    pad = padding(grid.norm(s), grid.N_max, tol * 1e-2) if grid.norm(s) > 0 else 0
    ops = build_ops(grid, s, omega=model.omega, N_trunc=grid.N_max + pad)
    sp_ = ops.space
    av = sp_.creation(model.v)
    H = ops.H0 + av + av.conj().T
    E = grid.inner(model.v, s)
    low = sp_.low(grid.N_max - 2)
    X = np.zeros((sp_.D, len(low)), dtype=complex)
    X[low, np.arange(len(low))] = 1.0
    if ops.bound:
        Y = apply_exp(-ops.X, H @ ops.W(X) - E * ops.W(X), ops.bound)
    else:
        Y = H @ X - E * X
    dev = _opnorm(Y - ops.H0 @ X)
    return Report("pullback", {"model": model.name, "grid": grid.to_dict(), "padding": pad},
                  dev, tol, {"E": _c(E), "s_norm": grid.norm(s),
                             "self_energy": self_energy_crosscheck(model, grid)})


# ------------------------------------------------------------ IBC

def fiber_blocks(model: ModelSpec, grid: GridSpec, P=0.0):
    """Blocks G[N] = H0^-1 A^+(v) : sector N -> N + 1 in the one-fermion fiber."""
    space = FockSpace(grid)
    ad = space.creation(model.v).tocsr()
    h0 = space.fiber_theta(model.theta, P).diagonal() + space.occ @ grid.sample(model.omega)
    off = space.off
    blocks = {}
    for n in range(space.N):
        a, b, c = off[n], off[n + 1], off[n + 2]
        blk = ad[b:c, a:b].toarray()
        blocks[n] = blk / h0[b:c, None]
    return space, blocks


def random_sectors(space: FockSpace, rng, top):
    out = {}
    for n in range(top + 1):
        dim = int(space.off[n + 1] - space.off[n])
        out[n] = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return out


def check_ibc(model: ModelSpec, grid: GridSpec, seed=0, symbolic_sectors=3, tol=TOL_EXACT) -> Report:
    """(1 + H0^-1 A^+) composed with its Neumann inverse, both orders."""
    rng = np.random.default_rng(seed)
    space, blocks = fiber_blocks(model, grid)
    psi = altdress.numeric_input(random_sectors(space, rng, grid.N_max), grid.N_max)
    a = altdress.wibc_apply(altdress.wibc_inverse(psi, model, blocks), model, blocks)
    b = altdress.wibc_inverse(altdress.wibc_apply(psi, model, blocks), model, blocks)
    scale_ = max(float(np.linalg.norm(x)) for _, x in psi.amps)
    dev = max(altdress.sector_deviation(a, psi), altdress.sector_deviation(b, psi)) / scale_
    sym = altdress.symbolic_input(range(symbolic_sectors + 1), symbolic_sectors)
    exact = altdress.is_identity_symbolic(
        altdress.wibc_apply(altdress.wibc_inverse(sym, model), model), sym) and \
        altdress.is_identity_symbolic(altdress.wibc_inverse(altdress.wibc_apply(sym, model), model), sym)
    if not exact:
        dev = math.inf
    return Report("ibc", {"model": model.name, "grid": grid.to_dict(), "seed": seed,
                          "symbolic_sectors": symbolic_sectors},
                  dev, tol, {"symbolic_identity": exact,
                             "max_G_block": max(float(np.abs(g).max()) for g in blocks.values())})


def check_glimm(model: ModelSpec, grid: GridSpec, seed=0, tol=TOL_EXACT) -> Report:
    """Renormalized inner product of Glimm images against the plain one."""
    rng = np.random.default_rng(seed)
    space, blocks = fiber_blocks(model, grid)
    psi = altdress.numeric_input(random_sectors(space, rng, grid.N_max), grid.N_max)
    phi = altdress.numeric_input(random_sectors(space, rng, grid.N_max), grid.N_max)
    Tpsi = altdress.glimm_T_apply(psi, model, blocks)
    Tphi = altdress.glimm_T_apply(phi, model, blocks)
    got = altdress.ren_inner(Tpsi, Tphi, model, blocks)
    ref = sum(complex(np.vdot(psi.sector(n), phi.sector(n))) for n in psi.sectors)
    back = altdress.glimm_T_inverse(Tpsi, model, blocks)
    norm = math.sqrt(sum(float(np.linalg.norm(x)) ** 2 for _, x in psi.amps))
    dev = max(abs(got - ref) / max(abs(ref), 1.0), altdress.sector_deviation(back, psi) / norm)
    return Report("glimm", {"model": model.name, "grid": grid.to_dict(), "seed": seed},
                  dev, tol, {"ren_inner": _c(got), "inner": _c(ref), "space": Tpsi.space_tag,
                             "prefactor": str(Tpsi.prefactor)})
