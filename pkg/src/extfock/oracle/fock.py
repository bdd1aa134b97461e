"""Truncated boson Fock spaces on a discrete momentum grid.

Modes carry quadrature weights w_i, so a^+(f) = sum_i sqrt(w_i) f(k_i) b_i^+
and [a(f), a^+(g)] = sum_i w_i conj(f_i) g_i, the grid version of <f, g>.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..renalg import sphere_area
from ..symgrammar import Symbol, evaluate
from . import backend


class BudgetError(RuntimeError):
    pass


DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class GridSpec:
    """Boson modes: momenta (signed, d = 1) or shell radii (shells = True)."""
    d: int
    momenta: tuple
    weights: tuple
    N_max: int
    M: int = 1
    shells: bool = False
    budget: int = DEFAULT_BUDGET
    sigma: float = 0.0
    Lambda: float = math.inf

    @property
    def K(self):
        return len(self.momenta)

    @property
    def radii(self):
        return np.abs(np.asarray(self.momenta, dtype=float))

    @property
    def w(self):
        return np.asarray(self.weights, dtype=float)

    @classmethod
    def log_gauss(cls, d=1, modes=8, sigma=0.1, Lambda=2.0, N_max=10, M=1, budget=DEFAULT_BUDGET):
        """Gauss-Legendre nodes in u = log r on [sigma, Lambda].

        d = 1: modes/2 radii, each used at +r and -r.  d > 1: radial shells
        carrying the sphere measure |S^{d-1}| r^{d-1}."""
        if not 0 < sigma < Lambda < math.inf:
            raise ValueError("need 0 < sigma < Lambda < oo")
        if d == 1:
            if modes % 2:
                raise ValueError("d = 1 grids use an even number of signed modes")
            n = modes // 2
        else:
            n = modes
        x, gw = np.polynomial.legendre.leggauss(n)
        a, b = math.log(sigma), math.log(Lambda)
        u = 0.5 * (b - a) * x + 0.5 * (b + a)
        r = np.exp(u)
        w = 0.5 * (b - a) * gw * r
        if d == 1:
            mom = np.concatenate([-r[::-1], r])
            wt = np.concatenate([w[::-1], w])
            return cls(1, tuple(mom), tuple(wt), N_max, M, False, budget, sigma, Lambda)
        wt = sphere_area(d) * r ** (d - 1) * w
        return cls(d, tuple(r), tuple(wt), N_max, M, True, budget, sigma, Lambda)

    def sample(self, f: Symbol) -> np.ndarray:
        if f is None:
            return np.zeros(self.K, dtype=complex)
        return np.asarray(evaluate(f, self.radii), dtype=complex)

    def inner(self, f: Symbol, g: Symbol) -> complex:
        """Grid version of <f, g> = int conj(f) g."""
        return complex(np.sum(self.w * np.conj(self.sample(f)) * self.sample(g)))

    def norm(self, f: Symbol) -> float:
        return math.sqrt(self.inner(f, f).real)

    def with_N(self, N_max):
        return GridSpec(self.d, self.momenta, self.weights, N_max, self.M, self.shells,
                        self.budget, self.sigma, self.Lambda)

    def to_dict(self):
        return {"d": self.d, "modes": self.K, "N_max": self.N_max, "M": self.M,
                "shells": self.shells, "sigma": self.sigma, "Lambda": self.Lambda}


class FockSpace:
    """Boson Fock space over the grid modes, truncated at N_trunc."""

    def __init__(self, grid: GridSpec, N_trunc: int | None = None, extra_dim: int = 1):
        self.grid = grid
        self.N = grid.N_max if N_trunc is None else N_trunc
        K = grid.K
        D = math.comb(K + self.N, K)
        if D * extra_dim > grid.budget:
            raise BudgetError(f"{D * extra_dim} amplitudes exceed the budget {grid.budget} "
                              f"(K={K}, N={self.N})")
        self.occ, self.off = backend.kernels.fock_basis(K, self.N)
        self.D = int(self.off[-1])
        self.sector = self.occ.sum(axis=1)

    def creation_values(self, vals) -> sp.csr_matrix:
        coeffs = np.sqrt(self.grid.w) * np.asarray(vals, dtype=complex)
        r, c, v = backend.kernels.creation_coo(self.occ, self.off, coeffs, self.N)
        return sp.csr_matrix((v, (r, c)), shape=(self.D, self.D))

    def creation(self, f: Symbol) -> sp.csr_matrix:
        return self.creation_values(self.grid.sample(f))

    def annihilation(self, f: Symbol) -> sp.csr_matrix:
        return self.creation(f).conj().T.tocsr()

    def number(self) -> sp.csr_matrix:
        return sp.diags(self.sector.astype(complex)).tocsr()

    def dgamma(self, omega: Symbol) -> sp.csr_matrix:
        om = self.grid.sample(omega)
        return sp.diags(self.occ @ om).tocsr()

    def fiber_theta(self, theta: Symbol, P: float = 0.0) -> sp.csr_matrix:
        """theta(|P - sum_i n_i k_i|) for one fermion in the fiber of momentum P."""
        if self.grid.shells:
            raise ValueError("the fermion fiber needs signed d = 1 momenta")
        p = np.abs(P - self.occ @ np.asarray(self.grid.momenta, dtype=float))
        # dispersions have nonnegative degrees, so theta(0) is the r -> 0+ limit
        p = np.maximum(p, 1e-300)
        return sp.diags(np.asarray(evaluate(theta, p), dtype=complex)).tocsr()

    def vacuum(self):
        v = np.zeros(self.D, dtype=complex)
        v[0] = 1.0
        return v

    def low(self, n):
        """Indices of basis states with at most n bosons."""
        return np.nonzero(self.sector <= n)[0]

    def sector_norms(self, vec):
        return np.array([np.linalg.norm(vec[self.off[n]:self.off[n + 1]]) for n in range(self.N + 1)])


def series_terms(bound: float, tol: float = 1e-17) -> int:
    """Smallest n with bound^n / n! < tol (norm of the Taylor remainder)."""
    n, term = 0, 1.0
    while term >= tol:
        n += 1
        term *= bound / n
        if n > 2000:
            break
    return n + 1


def displacement_generator(space: FockSpace, f: Symbol) -> sp.csr_matrix:
    ad = space.creation(f)
    return (ad - ad.conj().T).tocsr()


def apply_exp(X: sp.csr_matrix, vec, bound: float):
    """exp(X) vec with the series length taken from the norm bound."""
    X = X.tocsr()
    n = series_terms(bound)
    vec = np.asarray(vec, dtype=np.complex128)
    if vec.ndim == 2:
        term = vec.copy()
        out = vec.copy()
        for k in range(1, n + 1):
            term = (X @ term) / k
            out += term
        return out
    out, used = backend.kernels.taylor_apply(X.indptr.astype(np.int64), X.indices.astype(np.int64),
                                             X.data.astype(np.complex128), vec, 1e-18, n)
    return out


def weyl_bound(space: FockSpace, f: Symbol) -> float:
    """||a^+(f) - a(f)|| <= 2 ||f|| sqrt(N + 1) on the truncated space."""
    return 2 * space.grid.norm(f) * math.sqrt(space.N + 1)


@dataclass
class Ops:
    space: FockSpace
    a_dag: sp.csr_matrix
    a: sp.csr_matrix
    H0: sp.csr_matrix
    N: sp.csr_matrix
    X: sp.csr_matrix
    bound: float
    terms: int = field(default=0)

    def W(self, vec):
        return apply_exp(self.X, vec, self.bound)

    def W_adj(self, vec):
        return apply_exp(-self.X, vec, self.bound)

    def W_matrix(self):
        """Dense W (small spaces only)."""
        if self.space.D > 4000:
            raise BudgetError("dense W only for dimension <= 4000")
        eye = np.eye(self.space.D, dtype=complex)
        return np.column_stack([self.W(eye[:, i]) for i in range(self.space.D)])


def build_ops(grid: GridSpec, phi: Symbol | None, omega: Symbol | None = None,
              theta: Symbol | None = None, N_trunc: int | None = None, P: float = 0.0) -> Ops:
    """a^+(phi), a(phi), W(phi), H0 and the number operator.

    H0 = dGamma(omega) (+ theta of the fiber fermion momentum when given)."""
    space = FockSpace(grid, N_trunc)
    if phi is None:
        ad = sp.csr_matrix((space.D, space.D), dtype=complex)
    else:
        ad = space.creation(phi)
    a = ad.conj().T.tocsr()
    H0 = space.dgamma(omega) if omega is not None else sp.csr_matrix((space.D, space.D), dtype=complex)
    if theta is not None and not theta.is_zero:
        H0 = (H0 + space.fiber_theta(theta, P)).tocsr()
    X = (ad - a).tocsr()
    bound = 0.0 if phi is None else weyl_bound(space, phi)
    return Ops(space, ad, a, H0, space.number(), X, bound, series_terms(bound))


def padding(norm: float, N_max: int, tol: float, cap: int = 40) -> int:
    """Extra sectors so that a displacement of strength `norm` started in
    sector N_max leaks less than tol through the truncation edge.

    Amplitude for climbing p sectors is about norm^p sqrt((N+p)!/N!)/p!,
    and the edge error is its square (up and back down)."""
    for p in range(2, cap + 1):
        lg = p * math.log(max(norm, 1e-300)) + 0.5 * (math.lgamma(N_max + p + 1) - math.lgamma(N_max + 1)) \
            - math.lgamma(p + 1)
        if 2 * lg < math.log(tol) - math.log(1e3):
            return p
    return cap


class Lattice:
    """M fermions with momenta on the ring Z_L (spacing dk) tensored with
    bosons on the ring points  offsets * dk.  Fermion shifts are exact
    permutations, so commutator identities hold up to the boson edge."""

    def __init__(self, L, offsets, dk, M, N_max, budget=DEFAULT_BUDGET):
        self.L, self.M, self.dk = L, M, dk
        self.offsets = tuple(int(o) for o in offsets)
        mom = tuple(o * dk for o in self.offsets)
        top = max(abs(o) for o in self.offsets)
        self.grid = GridSpec(1, mom, tuple([dk] * len(mom)), N_max, M, False, budget,
                             0.5 * dk, (top + 0.5) * dk)
        self.bosons = FockSpace(self.grid, N_max, extra_dim=L ** M)
        self.F = L ** M
        self.D = self.F * self.bosons.D

    def _fidx(self, ps):
        i = 0
        for p in ps:
            i = i * self.L + (p % self.L)
        return i

    def _fstates(self):
        import itertools
        return list(itertools.product(range(self.L), repeat=self.M))

    def shift(self, j, k):
        """|..., p_j, ...> -> |..., p_j - k, ...>."""
        rows, cols = [], []
        for ps in self._fstates():
            q = list(ps)
            q[j] = (q[j] - k) % self.L
            rows.append(self._fidx(q))
            cols.append(self._fidx(ps))
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.F, self.F))

    def exchange(self, j, jp, k):
        """|P> -> |P - (e_j - e_j') k>."""
        rows, cols = [], []
        for ps in self._fstates():
            q = list(ps)
            q[j] = (q[j] - k) % self.L
            q[jp] = (q[jp] + k) % self.L
            rows.append(self._fidx(q))
            cols.append(self._fidx(ps))
        return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.F, self.F))

    def A_dag(self, f: Symbol):
        """sum_j a_j^+(f): boson k created, fermion j recoils by -k."""
        vals = self.grid.sample(f)
        out = sp.csr_matrix((self.D, self.D), dtype=complex)
        for i, o in enumerate(self.offsets):
            e = np.zeros(self.grid.K, dtype=complex)
            e[i] = vals[i]
            bi = self.bosons.creation_values(e)
            for j in range(self.M):
                out = out + sp.kron(self.shift(j, o), bi)
        return out.tocsr()

    def A(self, f: Symbol):
        return self.A_dag(f).conj().T.tocsr()

    def V(self, h: Symbol):
        """sum_{j != j'} sum_k w_k h(k) (exchange of k between j and j')."""
        vals = self.grid.sample(h)
        Fop = sp.csr_matrix((self.F, self.F), dtype=complex)
        for i, o in enumerate(self.offsets):
            for j in range(self.M):
                for jp in range(self.M):
                    if j != jp:
                        Fop = Fop + self.grid.w[i] * vals[i] * self.exchange(j, jp, o)
        return sp.kron(Fop, sp.identity(self.bosons.D, format="csr")).tocsr()

    def low(self, n):
        idx_b = self.bosons.low(n)
        return np.concatenate([f * self.bosons.D + idx_b for f in range(self.F)])
