"""Reference implementation of the oracle kernels (no compiled code).

Basis order: sectors N = 0..N_max, and inside a sector the occupation
vectors (n_0, ..., n_{K-1}) in ascending lexicographic order.
"""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp

BACKEND = "python"


def count_table(K: int, N_max: int):
    """cnt[k, n] = number of occupation vectors of k modes with total n."""
    cnt = np.zeros((K + 1, N_max + 2), dtype=np.int64)
    cnt[0, 0] = 1
    for k in range(1, K + 1):
        for n in range(N_max + 2):
            cnt[k, n] = math.comb(n + k - 1, k - 1)
    return cnt


def sector_offsets(K: int, N_max: int):
    cnt = count_table(K, N_max)
    off = np.zeros(N_max + 2, dtype=np.int64)
    for n in range(N_max + 1):
        off[n + 1] = off[n] + cnt[K, n]
    return off


def _compositions(K, N):
    if K == 1:
        yield (N,)
        return
    for first in range(N + 1):
        for rest in _compositions(K - 1, N - first):
            yield (first,) + rest


def fock_basis(K: int, N_max: int):
    rows = []
    for n in range(N_max + 1):
        rows.extend(_compositions(K, n))
    occ = np.array(rows, dtype=np.int64).reshape(len(rows), K)
    return occ, sector_offsets(K, N_max)


def rank(row, cnt, off):
    K = len(row)
    N = int(sum(row))
    r = 0
    rem = N
    for i in range(K - 1):
        for m in range(int(row[i])):
            r += cnt[K - 1 - i, rem - m]
        rem -= int(row[i])
    return int(off[N] + r)


def creation_coo(occ, off, coeffs, N_max: int):
    """Entries of sum_i coeffs[i] b_i^+ on the truncated basis."""
    D, K = occ.shape
    cnt = count_table(K, N_max)
    rows, cols, vals = [], [], []
    nz = [i for i in range(K) if coeffs[i] != 0]
    for s in range(D):
        row = occ[s]
        if int(row.sum()) >= N_max:
            continue
        for i in nz:
            new = row.copy()
            new[i] += 1
            rows.append(rank(new, cnt, off))
            cols.append(s)
            vals.append(coeffs[i] * math.sqrt(row[i] + 1))
    return (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
            np.array(vals, dtype=np.complex128))


def taylor_apply(indptr, indices, data, vec, tol=1e-16, max_terms=400):
    """exp(X) vec for X in CSR form; returns (result, terms used).

    Stops when a term's 1-norm drops below tol times the running sum."""
    X = sp.csr_matrix((data, indices, indptr), shape=(len(indptr) - 1, len(vec)))
    term = np.array(vec, dtype=np.complex128)
    out = term.copy()
    k = 0
    while k < max_terms:
        k += 1
        term = (X @ term) / k
        out += term
        tn = np.abs(term.real).sum() + np.abs(term.imag).sum()
        on = np.abs(out.real).sum() + np.abs(out.imag).sum()
        if tn <= tol * max(on, 1e-300):
            break
    return out, k + 1
