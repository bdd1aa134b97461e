"""Compiled vs pure-Python oracle kernels.

    python3 benchmarks/bench_kernels.py [--modes 8] [--nmax 8] [--repeat 3]
"""
import argparse
import time

import numpy as np
import scipy.sparse as sp

from extfock.oracle import _pykernels
from extfock.oracle.backend import available


def _timed(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def bench(mod, K, N, repeat):
    coeffs = 0.1 * (np.arange(1, K + 1) + 0.5j)
    t_basis, (occ, off) = _timed(lambda: mod.fock_basis(K, N), repeat)
    t_coo, (r, c, v) = _timed(lambda: mod.creation_coo(occ, off, coeffs, N), repeat)
    D = int(off[-1])
    ad = sp.csr_matrix((v, (r, c)), shape=(D, D))
    X = (ad - ad.conj().T).tocsr()
    vec = np.zeros(D, dtype=complex)
    vec[0] = 1.0
    t_exp, (w, _) = _timed(lambda: mod.taylor_apply(X.indptr.astype(np.int64), X.indices.astype(np.int64),
                                                    X.data, vec, 1e-16, 200), repeat)
    return {"basis": t_basis, "creation": t_coo, "taylor": t_exp, "dim": D, "W_vac": w}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--modes", type=int, default=8)
    ap.add_argument("--nmax", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    rows = [("python", bench(_pykernels, a.modes, a.nmax, a.repeat))]
    if "cython" in available():
        from extfock.oracle import _kernels
        rows.append(("cython", bench(_kernels, a.modes, a.nmax, a.repeat)))
    print(f"modes={a.modes} N_max={a.nmax} dim={rows[0][1]['dim']}")
    print(f"{'backend':8s} {'basis':>10s} {'creation':>10s} {'taylor':>10s}")
    for name, r in rows:
        print(f"{name:8s} {r['basis']:10.4f} {r['creation']:10.4f} {r['taylor']:10.4f}")
    if len(rows) == 2:
        py, cy = rows[0][1], rows[1][1]
        diff = float(np.max(np.abs(py["W_vac"] - cy["W_vac"])))
        print("speedup  " + " ".join(f"{k}={py[k] / cy[k]:.1f}x" for k in ("basis", "creation", "taylor")))
        print(f"max |W_py - W_cy| on vacuum: {diff:.2e}")
    else:
        print("compiled kernels not built; reinstall with pip install -e . --no-build-isolation")


if __name__ == "__main__":
    main()
