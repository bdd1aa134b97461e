import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from extfock import altdress
from extfock.altdress import (
    DomainError, IBCRecord, glimm_T_apply, glimm_T_inverse, glimm_lambda, ibc_decompose,
    is_identity_symbolic, numeric_input, ren_inner, sector_deviation, symbolic_input, wibc_apply,
    wibc_inverse,
)
from extfock.config import preset_model
from extfock.renalg import ConvergenceClass as CC

IBC = preset_model("nelson-ibc")


def random_blocks(rng, dims):
    return {n: rng.normal(size=(dims[n + 1], dims[n])) + 1j * rng.normal(size=(dims[n + 1], dims[n]))
            for n in range(len(dims) - 1)}


def random_state(rng, dims, N_max):
    return numeric_input({n: rng.normal(size=dims[n]) + 1j * rng.normal(size=dims[n])
                          for n in range(N_max + 1)}, N_max)


@pytest.mark.parametrize("N", [0, 1, 3, 6])
def test_symbolic_inverse_both_orders(N):
    psi = symbolic_input(range(N + 1), N)
    assert is_identity_symbolic(wibc_inverse(wibc_apply(psi, IBC), IBC), psi)
    assert is_identity_symbolic(wibc_apply(wibc_inverse(psi, IBC), IBC), psi)


def test_neumann_series_terminates():
    psi = symbolic_input([0], 4)
    inv = wibc_inverse(psi, IBC)
    assert dict(inv.terms_used) == {n: n + 1 for n in range(5)}
    assert inv.sector(3) == {(3, 0): Fraction(-1)}
    assert inv.dropped                 # G^5 psi_0 leaves the truncation


def test_nilpotent_on_truncation():
    psi = symbolic_input([0, 1], 3)
    cur = psi
    for _ in range(4):
        cur = altdress._raise(cur, 1)
    assert cur.amps == ()


@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 5))
def test_numeric_inverse_both_orders(seed, N_max):
    rng = np.random.default_rng(seed)
    dims = [int(x) for x in rng.integers(1, 5, size=N_max + 2)]
    G = random_blocks(rng, dims)
    psi = random_state(rng, dims, N_max)
    for x in (wibc_inverse(wibc_apply(psi, IBC, G), IBC, G), wibc_apply(wibc_inverse(psi, IBC, G), IBC, G)):
        scale = max(np.linalg.norm(a) for _, a in psi.amps)
        assert sector_deviation(x, psi) <= 1e-12 * scale * max(1.0, max(np.abs(b).max() for b in G.values())) ** N_max


def test_gap_required():
    with pytest.raises(DomainError):
        wibc_apply(symbolic_input([0], 2), preset_model("nelson-massless"))
    with pytest.raises(DomainError):
        glimm_T_apply(symbolic_input([0], 2), preset_model("nelson-massless"))


def test_numeric_state_needs_blocks():
    with pytest.raises(ValueError):
        wibc_apply(numeric_input({0: [1.0]}, 2), IBC)


def test_ibc_scalar_bookkeeping():
    rec = ibc_decompose(IBC)
    assert rec.T_scalar.integrand.is_zero and rec.T_scalar.offset == 0
    assert altdress.classify(rec.E) == CC.UVDivergent
    assert "H0^(1/2)" in rec.S_star_S


def test_ibc_contraction_finite_part():
    # offset of <v, v/(theta+omega)> after removing the UV tail 2 r^-3 on r > 1
    rec = ibc_decompose(IBC)
    f = lambda r: 4 * math.pi * (r / (1 + r + r * r / 2) - (2 / r if r > 1 else 0))
    ref = integrate.quad(f, 0, 1, epsrel=1e-13)[0] + integrate.quad(f, 1, np.inf, epsrel=1e-13, limit=500)[0]
    assert rec.contraction.offset == pytest.approx(ref, rel=1e-8)


def test_ibc_record_round_trip():
    rec = ibc_decompose(IBC)
    back = IBCRecord.from_dict(rec.to_dict(), IBC.d)
    assert back == rec


def test_glimm_lambda_classes():
    assert altdress.classify(glimm_lambda(preset_model("nelson-massless"))) == CC.BothDivergent
    assert altdress.classify(glimm_lambda(preset_model("frohlich"))) == CC.UVDivergent


def test_glimm_symbolic_inverse():
    psi = symbolic_input(range(4), 3)
    res = glimm_T_apply(psi, IBC)
    assert res.sectors.sector(2)[(2, 0)] == Fraction(1, 2)
    assert is_identity_symbolic(glimm_T_inverse(res, IBC), psi)


def test_renormalized_inner_product():
    rng = np.random.default_rng(3)
    dims = [1, 3, 6, 10]
    G = random_blocks(rng, dims)
    a, b = random_state(rng, dims, 3), random_state(rng, dims, 3)
    ref = sum(complex(np.vdot(a.sector(n), b.sector(n))) for n in range(4))
    got = ren_inner(glimm_T_apply(a, IBC, G), glimm_T_apply(b, IBC, G), IBC, G)
    assert got == pytest.approx(ref, rel=1e-12)
