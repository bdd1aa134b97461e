"""Acceptance criteria 1-10, each at its stated tolerance and time limit.

Every test prints one PASS/FAIL line (visible with or without -s)."""
import math
import random
import time
from fractions import Fraction

import pytest
from scipy import integrate

from extfock import erenfield as ef
from extfock import oracle, sacheck
from extfock.altdress import is_identity_symbolic, symbolic_input, wibc_apply, wibc_inverse
from extfock.cli import ORACLE_GRIDS, _fixed_symbols
from extfock.config import TABLE_PRESETS, load_preset, preset_model
from extfock.fockstates import BaseState, NormalTerm, make_coherent
from extfock.renalg import evaluate_convergent, normalize, sphere_area
from extfock.renormalize import check_intertwining, pullback_full
from extfock.sacheck import ESA, NOT_COVERED, TABLE_COLUMNS
from extfock.symgrammar import Symbol, make_term, parse_symbol
from extfock.weylext import weyl, weyl_adjoint, weyl_equal, weyl_mul

from reference_tables import ERRATA, TABLES

THREE = ("nelson-massless", "nelson-massive", "frohlich")


@pytest.fixture
def report(capsys):
    def emit(n, title, ok, elapsed, limit, detail=""):
        line = f"criterion {n:>2} {title:<32} {'PASS' if ok else 'FAIL'}  {elapsed:7.2f} s (limit {limit} s)"
        with capsys.disabled():
            print("\n" + line + (f"  {detail}" if detail else ""))
        return ok
    return emit


def grid(check, model=None):
    modes, nmax, sigma, lam = ORACLE_GRIDS[check]
    if model is not None:
        o, keys = model.oracle, model.oracle_keys
        modes = o["modes"] if "modes" in keys else modes
        nmax = o["n_max"] if "n_max" in keys else nmax
        sigma = o["sigma"] if "sigma" in keys else sigma
        lam = o["lambda"] if "lambda" in keys else lam
    return oracle.GridSpec.log_gauss(1, modes, sigma, lam, nmax)


def test_c01_scaling_tables(report):
    t = time.perf_counter()
    got = {title: {r.name: r.values for r in sacheck.model_table([preset_model(n) for n in names])}
           for title, names in TABLE_PRESETS.items()}
    elapsed = time.perf_counter() - t
    bad, notes = [], []
    for title, rows in TABLES.items():
        for name, ref in rows.items():
            have = got.get(title, {}).get(name)
            if have is None:
                bad.append(f"{name}: missing")
                continue
            for col, want, val in zip(TABLE_COLUMNS, ref, have):
                if (name, col) in ERRATA:
                    printed, corrected = ERRATA[(name, col)]
                    notes.append(f"{name} {col}: printed {printed}, model gives {val}")
                    want = corrected
                if not (isinstance(val, Fraction) and val == Fraction(want)):
                    bad.append(f"{name} {col}: {val} != {want}")
    ok = not bad and elapsed < 1.0
    report(1, "scaling tables", ok, elapsed, 1, "; ".join(bad or [f"erratum: {n}" for n in notes]))
    assert ok, bad


def test_c02_verdicts(report):
    t = time.perf_counter()
    want = {**{n: ESA for n in THREE}, "dipole": NOT_COVERED, "pseudo-relativistic": NOT_COVERED}
    got = {n: sacheck.classify(preset_model(n)) for n in want}
    elapsed = time.perf_counter() - t
    bad = [f"{n}: {v.kind}" for n, v in got.items() if v.kind != want[n]]
    pr = got["pseudo-relativistic"]
    if pr.m_theta != 1 or pr.scaling.m_V != -2:
        bad.append("pseudo-relativistic preset is not the (m_V, m_theta) = (-2, 1) limiting case")
    if any(got[n].m_theta != 2 or preset_model(n).d != 3 for n in THREE):
        bad.append("ESA models are not d = 3, m_theta = 2")
    ok = not bad and elapsed < 1.0
    report(2, "classifier verdicts", ok, elapsed, 1, "; ".join(bad))
    assert ok, bad


def test_c03_pullback_ledger(report):
    t = time.perf_counter()
    res = {n: pullback_full(preset_model(n)) for n in THREE}
    elapsed = time.perf_counter() - t
    bad = [n for n, r in res.items() if not (r.residual_zero and r.ledger_closed.symbolic)]
    ok = not bad and elapsed < 5.0
    report(3, "pullback ledger closure", ok, elapsed, 5, ", ".join(bad))
    assert ok, bad


def test_c04_delta_m(report):
    t = time.perf_counter()
    rows = []
    phi = parse_symbol("0.5*window(1,2)")
    for name in THREE:
        m = preset_model(name)
        for M in (1, 2):
            for p in (None, phi):
                base = BaseState("Psi", M, support_radius=1.0, avoids_collisions=True)
                (w, _), c = make_coherent(base, m.s, p).items[0]
                rows += [(name,) + r for r in check_intertwining(NormalTerm(c, None, w), m.theta1, 3)]
    elapsed = time.perf_counter() - t
    bad = [r for r in rows if not r[4]]
    covered = {(r[1], r[2]) for r in rows}
    ok = not bad and covered == {(M, N) for M in (1, 2) for N in range(4)} and elapsed < 10.0
    report(4, "delta-m intertwining", ok, elapsed, 10, f"{len(rows)} sectors" if ok else str(bad))
    assert ok


def test_c05_overlap(report):
    g = oracle.GridSpec.log_gauss(1, 8, 0.1, 2.0, 10)
    t = time.perf_counter()
    r = oracle.check_overlap_random(g, pairs=20, seed=0, tol=1e-8)
    elapsed = time.perf_counter() - t
    ok = r.passed and elapsed < 30.0
    report(5, "coherent overlap", ok, elapsed, 30, f"max dev {r.deviation:.2e}")
    assert ok


def test_c06_pullthrough_commutator(report):
    t = time.perf_counter()
    g = grid("pullthrough")
    reps = [oracle.check_pullthrough(*_fixed_symbols(g), g, 1e-8)]
    for M in (1, 2):
        lat = oracle.default_lattice(M, ORACLE_GRIDS["commutator"][1])
        reps.append(oracle.check_commutatorV(*_fixed_symbols(lat.grid), lat, 1e-8))
    elapsed = time.perf_counter() - t
    ok = all(r.passed for r in reps) and elapsed < 60.0
    report(6, "pull-through and commutator", ok, elapsed, 60,
           " ".join(f"{r.check}{r.params.get('M', '')}={r.deviation:.1e}" for r in reps))
    assert ok


def test_c07_cutoff_pullback(report):
    cfg = load_preset("nelson-cutoff")
    t = time.perf_counter()
    r = oracle.check_pullback(cfg.model, grid("pullback", cfg), 1e-6)
    elapsed = time.perf_counter() - t
    ok = r.passed and elapsed < 120.0
    report(7, "cutoff pullback", ok, elapsed, 120, f"dev {r.deviation:.2e}")
    assert ok


def test_c08_ibc(report):
    cfg = load_preset("nelson-ibc")
    g = grid("ibc", cfg)
    assert g.N_max >= 8
    t = time.perf_counter()
    r = oracle.check_ibc(cfg.model, g, seed=0, symbolic_sectors=3, tol=1e-12)
    psi = symbolic_input(range(4), 3)
    exact = is_identity_symbolic(wibc_inverse(wibc_apply(psi, cfg.model), cfg.model), psi) and \
        is_identity_symbolic(wibc_apply(wibc_inverse(psi, cfg.model), cfg.model), psi)
    elapsed = time.perf_counter() - t
    ok = r.passed and exact and elapsed < 10.0
    report(8, "IBC bijectivity", ok, elapsed, 10, f"dev {r.deviation:.1e}, symbolic {exact}")
    assert ok


def test_c09_closed_form_vs_quadrature(report):
    rng = random.Random(9)
    t = time.perf_counter()
    worst, logs = 0.0, 0
    for _ in range(200):
        d = rng.choice((1, 2, 3))
        a = Fraction(rng.randint(-32, 16), 8)
        lo = 10 ** rng.uniform(-2, 0.5)
        hi = lo * 10 ** rng.uniform(0.05, 2)
        logs += a == -d
        got = evaluate_convergent(normalize(parse_symbol(f"window({lo!r},{hi!r})*pow({a})", d)))
        val, _ = integrate.quad(lambda r: r ** float(a + d - 1), lo, hi, epsabs=0, epsrel=1e-13, limit=200)
        ref = sphere_area(d) * val
        worst = max(worst, abs(got - ref) / abs(ref))
    elapsed = time.perf_counter() - t
    ok = worst < 1e-9 and elapsed < 10.0
    report(9, "closed form vs quadrature", ok, elapsed, 10, f"max rel {worst:.1e} ({logs} log cases)")
    assert ok


COEFFS = (1, -1, 2, -2, 0.5, -0.5, 4, 0.25)


def _label(rng, d=3):
    # dyadic coefficients keep float arithmetic exact, so equality is decided canonically
    terms = [make_term(rng.choice(COEFFS) + 1j * rng.choice((0, 0, 1, -0.5)), Fraction(rng.randint(-12, 4), 4))
             for _ in range(rng.randint(1, 2))]
    return Symbol.build(terms, d)


def _elem(rng, d=3):
    acc = {}
    for _ in range(rng.randint(1, 2)):
        e = normalize(_label(rng, d)).integrand if rng.random() < 0.8 else Symbol((), d)
        acc[e] = rng.choice(COEFFS)
    num = ef.ERenSum.build(acc, d)
    if rng.random() < 0.5:
        den = ef.ERenSum.const(1, d)
    else:
        den = ef.ERenSum.build({normalize(_label(rng, d)).integrand: rng.choice(COEFFS)}, d)
    return ef.make(num, den)


def test_c10_field_and_weyl(report):
    rng = random.Random(10)
    t = time.perf_counter()
    fails, cases = {}, 0

    def check(name, v):
        if not (v and v.symbolic):
            fails[name] = fails.get(name, 0) + 1

    zero, one = ef.scalar(0, 3), ef.one(3)
    for _ in range(200):
        a, b, c = _elem(rng), _elem(rng), _elem(rng)
        cases += 1
        check("add assoc", ef.eren_equal((a + b) + c, a + (b + c)))
        check("mul assoc", ef.eren_equal((a * b) * c, a * (b * c)))
        check("add comm", ef.eren_equal(a + b, b + a))
        check("mul comm", ef.eren_equal(a * b, b * a))
        check("distributive", ef.eren_equal(a * (b + c), a * b + a * c))
        check("additive inverse", ef.eren_equal(a + (-a), zero))
        check("multiplicative inverse", ef.eren_equal(a * ef.eren_inv(a), one))
    for _ in range(200):
        w = [weyl(_label(rng)) for _ in range(3)]
        cases += 1
        check("cocycle assoc", weyl_equal(weyl_mul(weyl_mul(w[0], w[1]), w[2]),
                                          weyl_mul(w[0], weyl_mul(w[1], w[2]))))
        check("W W* = 1", weyl_equal(weyl_mul(w[0], weyl_adjoint(w[0])), weyl(Symbol((), 3))))
    elapsed = time.perf_counter() - t
    ok = not fails and elapsed < 30.0
    report(10, "field and Weyl properties", ok, elapsed, 30, f"{cases} cases, failures {fails or 0}")
    assert ok, fails
