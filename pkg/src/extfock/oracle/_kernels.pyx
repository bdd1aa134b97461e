# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled oracle kernels; same interface and basis order as _pykernels."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"


cdef long long _comb(long long n, long long k):
    cdef long long r = 1
    cdef long long i
    if k < 0 or k > n:
        return 0
    if k > n - k:
        k = n - k
    for i in range(1, k + 1):
        r = r * (n - k + i) // i
    return r


def count_table(int K, int N_max):
    cdef cnp.ndarray[cnp.int64_t, ndim=2] cnt = np.zeros((K + 1, N_max + 2), dtype=np.int64)
    cdef int k, n
    cnt[0, 0] = 1
    for k in range(1, K + 1):
        for n in range(N_max + 2):
            cnt[k, n] = _comb(n + k - 1, k - 1)
    return cnt


def sector_offsets(int K, int N_max):
    cnt = count_table(K, N_max)
    off = np.zeros(N_max + 2, dtype=np.int64)
    cdef int n
    for n in range(N_max + 1):
        off[n + 1] = off[n] + cnt[K, n]
    return off


cdef void _first(long long* row, int K, int N):
    cdef int i
    for i in range(K):
        row[i] = 0
    row[K - 1] = N


cdef bint _next(long long* row, int K):
    # next composition in ascending lex order with the same total
    cdef int i, j
    cdef long long tail
    if K == 1:
        return False
    # find rightmost i < K-1 that can be incremented (tail after it nonzero)
    tail = row[K - 1]
    i = K - 2
    while i >= 0:
        if tail > 0:
            row[i] += 1
            tail -= 1
            for j in range(i + 1, K):
                row[j] = 0
            row[K - 1] = tail
            return True
        tail += row[i]
        i -= 1
    return False


def fock_basis(int K, int N_max):
    off = sector_offsets(K, N_max)
    cdef long long D = off[N_max + 1]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] occ = np.zeros((D, K), dtype=np.int64)
    cdef long long* row = <long long*> malloc(K * sizeof(long long))
    cdef long long s = 0
    cdef int n, i
    try:
        for n in range(N_max + 1):
            _first(row, K, n)
            while True:
                for i in range(K):
                    occ[s, i] = row[i]
                s += 1
                if not _next(row, K):
                    break
    finally:
        free(row)
    return occ, off


cdef long long _rank(long long* row, int K, cnp.int64_t[:, :] cnt, cnp.int64_t[:] off):
    cdef long long N = 0, r = 0, rem, m
    cdef int i
    for i in range(K):
        N += row[i]
    rem = N
    for i in range(K - 1):
        for m in range(row[i]):
            r += cnt[K - 1 - i, rem - m]
        rem -= row[i]
    return off[N] + r


def rank(row_in, cnt_in, off_in):
    cdef cnp.int64_t[:, :] cnt = np.asarray(cnt_in, dtype=np.int64)
    cdef cnp.int64_t[:] off = np.asarray(off_in, dtype=np.int64)
    cdef int K = len(row_in)
    cdef long long* row = <long long*> malloc(K * sizeof(long long))
    cdef int i
    try:
        for i in range(K):
            row[i] = row_in[i]
        return _rank(row, K, cnt, off)
    finally:
        free(row)


def creation_coo(occ_in, off_in, coeffs_in, int N_max):
    cdef cnp.int64_t[:, :] occ = np.asarray(occ_in, dtype=np.int64)
    cdef cnp.int64_t[:] off = np.asarray(off_in, dtype=np.int64)
    cdef cnp.complex128_t[:] coeffs = np.asarray(coeffs_in, dtype=np.complex128)
    cdef long long D = occ.shape[0]
    cdef int K = occ.shape[1]
    cdef cnp.int64_t[:, :] cnt = count_table(K, N_max)
    cdef int nnz_modes = 0
    cdef int i, q
    for i in range(K):
        if coeffs[i] != 0:
            nnz_modes += 1
    cdef long long cap = D * nnz_modes
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap, dtype=np.complex128)
    cdef cnp.int64_t[:] rv = rows
    cdef cnp.int64_t[:] cv = cols
    cdef cnp.complex128_t[:] vv = vals
    cdef long long* row = <long long*> malloc(K * sizeof(long long))
    cdef long long s, tot, e = 0
    try:
        for s in range(D):
            tot = 0
            for q in range(K):
                row[q] = occ[s, q]
                tot += row[q]
            if tot >= N_max:
                continue
            for i in range(K):
                if coeffs[i] == 0:
                    continue
                row[i] += 1
                rv[e] = _rank(row, K, cnt, off)
                row[i] -= 1
                cv[e] = s
                vv[e] = coeffs[i] * sqrt(<double>(row[i] + 1))
                e += 1
    finally:
        free(row)
    return rows[:e], cols[:e], vals[:e]


def taylor_apply(indptr_in, indices_in, data_in, vec, double tol=1e-16, int max_terms=400):
    cdef cnp.int64_t[:] indptr = np.asarray(indptr_in, dtype=np.int64)
    cdef cnp.int64_t[:] indices = np.asarray(indices_in, dtype=np.int64)
    cdef cnp.complex128_t[:] data = np.asarray(data_in, dtype=np.complex128)
    cdef long long n = indptr.shape[0] - 1
    out_a = np.array(vec, dtype=np.complex128)
    term_a = out_a.copy()
    nxt_a = np.zeros(n, dtype=np.complex128)
    cdef cnp.complex128_t[:] out = out_a
    cdef cnp.complex128_t[:] term = term_a
    cdef cnp.complex128_t[:] nxt = nxt_a
    cdef long long r, p
    cdef int k = 0
    cdef double tn, on
    cdef double complex acc
    while k < max_terms:
        k += 1
        tn = 0.0
        on = 0.0
        for r in range(n):
            acc = 0
            for p in range(indptr[r], indptr[r + 1]):
                acc = acc + data[p] * term[indices[p]]
            nxt[r] = acc / k
        for r in range(n):
            term[r] = nxt[r]
            out[r] = out[r] + nxt[r]
            tn += fabs(nxt[r].real) + fabs(nxt[r].imag)
            on += fabs(out[r].real) + fabs(out[r].imag)
        if tn <= tol * (on if on > 1e-300 else 1e-300):
            break
    return out_a, k + 1
