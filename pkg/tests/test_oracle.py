import json
import math

import numpy as np
import pytest

from extfock import oracle
from extfock.config import preset_model
from extfock.oracle import (
    BudgetError, FockSpace, GridSpec, build_ops, check_commutatorV, check_glimm, check_ibc,
    check_overlap, check_pullback, check_pullthrough, check_sector_distribution, default_lattice,
    padding, random_windowed, self_energy_crosscheck,
)
from extfock.oracle import _pykernels
from extfock.renormalize import ModelSpec
from extfock.symgrammar import parse_symbol

SMALL = GridSpec.log_gauss(1, 4, 0.1, 2.0, 6)


def sym(text):
    return parse_symbol(text, 1)


PHI = sym("0.3*pow(-1/2)*window(0.1,2.0)")
PHIP = sym("(0.2+0.1j)*pow(1)*window(0.1,1.24)")


def test_grid_integrates_window():
    g = GridSpec.log_gauss(1, 16, 0.1, 2.0, 0)
    # int over |k| in (0.1, 2) of r^-1, both signs: 2 ln 20
    assert g.inner(sym("pow(-1/2)"), sym("pow(-1/2)")).real == pytest.approx(2 * math.log(20), rel=1e-12)


def test_grid_rejects_odd_modes():
    with pytest.raises(ValueError):
        GridSpec.log_gauss(1, 5)


def test_fock_dimension():
    space = FockSpace(SMALL)
    assert space.D == math.comb(4 + 6, 4)
    assert list(space.sector_norms(space.vacuum())) == [1.0] + [0.0] * 6


def test_zero_label_is_identity():
    ops = build_ops(SMALL, None)
    v = np.arange(ops.space.D, dtype=complex)
    assert np.array_equal(ops.W(v), v)


def test_weyl_is_unitary_and_adjoint_exact():
    ops = build_ops(SMALL, PHIP)
    W = ops.W_matrix()
    low = ops.space.low(SMALL.N_max - 2)
    assert np.abs((W.conj().T @ W - np.eye(ops.space.D))[:, low]).max() < 1e-10
    eye = np.eye(ops.space.D, dtype=complex)
    Wadj = np.column_stack([ops.W_adj(eye[:, i]) for i in range(ops.space.D)])
    assert np.abs(Wadj - W.conj().T).max() < 1e-13


def test_number_equals_dgamma_of_one():
    space = FockSpace(SMALL)
    H0, N = space.dgamma(sym("1")), space.number()
    assert abs(H0 - N).max() == 0
    assert abs(H0 @ N - N @ H0).max() == 0


def test_creation_adds_one_boson():
    space = FockSpace(SMALL)
    ad = space.creation(PHI)
    rows, cols = ad.nonzero()
    assert np.all(space.sector[rows] == space.sector[cols] + 1)


def test_budget():
    with pytest.raises(BudgetError):
        FockSpace(GridSpec.log_gauss(1, 16, 0.1, 2.0, 12, budget=10_000))


def test_padding_grows_with_strength():
    assert padding(0.1, 8, 1e-10) <= padding(0.5, 8, 1e-10) <= padding(1.0, 8, 1e-10)


def test_random_windowed_norm():
    rng = np.random.default_rng(1)
    f = random_windowed(rng, SMALL, 0.4)
    assert SMALL.norm(f) == pytest.approx(0.4, rel=1e-12)


def test_overlap_single_pair():
    r = check_overlap(sym("0.2*window(0.1,2.0)"), sym("-0.1j*pow(1)*window(0.1,2.0)"),
                      GridSpec.log_gauss(1, 4, 0.1, 2.0, 10))
    assert r.passed, r.to_dict()


def test_overlap_rejects_large_labels():
    with pytest.raises(ValueError):
        check_overlap(sym("window(0.1,2.0)"), PHI, SMALL)


def test_sector_distribution_is_poisson_in_norm_squared():
    g = GridSpec.log_gauss(1, 4, 0.1, 2.0, 10)
    r = check_sector_distribution(sym("0.3*window(0.1,2.0)"), g)
    assert r.passed
    assert r.details["exp_minus_norm"] > 1e3 * r.details["exp_minus_norm_squared"]


def test_pullthrough_small():
    r = check_pullthrough(PHI, PHIP, GridSpec.log_gauss(1, 4, 0.1, 2.0, 5))
    assert r.passed, r.to_dict()


def test_pullthrough_orthogonal_labels_commute():
    # disjoint windows: <phi', phi> = 0, so a^+(phi) commutes with W(phi')
    a, b = sym("0.3*window(0.1,0.3)"), sym("0.3*window(0.5,2.0)")
    g = GridSpec.log_gauss(1, 4, 0.1, 2.0, 5)
    assert g.inner(a, b) == 0
    r = check_pullthrough(a, b, g)
    assert r.passed and r.details["scalar"] == [0.0, 0.0]


@pytest.mark.parametrize("M", [1, 2])
def test_commutator_with_potential(M):
    lat = default_lattice(M, 4)
    r = check_commutatorV(sym("0.3*window(0.25,1.25)"), sym("(0.2+0.1j)*pow(1)*window(0.25,1.0)"), lat)
    assert r.passed, r.to_dict()
    assert r.details["V_present"] == (M > 1)


def test_pullback_cutoff():
    r = check_pullback(preset_model("nelson-cutoff"), GridSpec.log_gauss(1, 4, 0.5, 2.0, 5))
    assert r.passed, r.to_dict()
    assert r.details["self_energy"]["deviation"] < 1e-10


def test_pullback_without_coupling_is_free():
    m = ModelSpec.from_strings("free", 1, "0", "pow(1)", "0")
    r = check_pullback(m, SMALL)
    assert r.deviation == 0


def test_pullback_rejects_fermion_dispersion():
    with pytest.raises(ValueError):
        check_pullback(preset_model("nelson-ibc"), SMALL)


def test_self_energy_crosscheck():
    out = self_energy_crosscheck(preset_model("nelson-cutoff"), SMALL)
    assert out["deviation"] < 1e-10


def test_ibc_and_glimm():
    g = GridSpec.log_gauss(1, 4, 0.1, 2.0, 6)
    m = preset_model("nelson-ibc")
    for r in (check_ibc(m, g), check_glimm(m, g)):
        assert r.passed, r.to_dict()


def test_report_json():
    r = check_pullthrough(PHI, PHIP, GridSpec.log_gauss(1, 4, 0.1, 2.0, 4))
    d = json.loads(r.to_json())
    assert set(d) == {"check", "params", "deviation", "tolerance", "pass", "details"}
    assert d["pass"] is True


@pytest.mark.skipif("cython" not in oracle.available(), reason="compiled kernels not built")
def test_backend_parity():
    results = {}
    for name in ("python", "cython"):
        prev = oracle.use(name)
        try:
            assert oracle.current() == name
            ops = build_ops(SMALL, PHIP)
            results[name] = (ops.space.occ.copy(), ops.a_dag.toarray(), ops.W(ops.space.vacuum()))
        finally:
            oracle.use(prev)
    (o1, a1, w1), (o2, a2, w2) = results["python"], results["cython"]
    assert np.array_equal(o1, o2)
    assert np.abs(a1 - a2).max() < 1e-15
    assert np.abs(w1 - w2).max() < 1e-14


def test_python_kernels_reference():
    occ, off = _pykernels.fock_basis(2, 2)
    assert off.tolist() == [0, 1, 3, 6]
    by_sector = [sorted(map(tuple, occ[off[n]:off[n + 1]].tolist())) for n in range(3)]
    assert by_sector == [[(0, 0)], [(0, 1), (1, 0)], [(0, 2), (1, 1), (2, 0)]]


def test_unknown_backend():
    with pytest.raises(ValueError):
        oracle.use("fortran")
