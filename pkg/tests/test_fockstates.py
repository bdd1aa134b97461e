import math

import numpy as np
import pytest

from extfock import erenfield as ef
from extfock.fockstates import (
    BaseState, ClassMismatchError, DressedState, NotL2Error, ScalingViolation, add_states, apply_A,
    apply_Adagger_first, apply_Einfty, apply_H0, apply_W, inner_coherent, make_coherent, scale_state,
    undressed,
)
from extfock.oracle import GridSpec
from extfock.oracle.checks import _coherent
from extfock.renalg import evaluate_convergent, pair
from extfock.symgrammar import parse_symbol, zero


def S(text, d=3):
    return parse_symbol(text, d)


OMEGA = S("pow(1)")
V = S("pow(-1/2)")
SDRESS = S("-pow(-3/2)")


def test_coherent_state_single_word():
    st = make_coherent(BaseState(M=1), SDRESS)
    assert len(st.items) == 1
    assert st.space_tag == DressedState.FBAR
    (w, mono), c = st.items[0]
    assert w.s == SDRESS and w.phi is None and mono == ()


def test_phi_must_be_square_integrable():
    with pytest.raises(NotL2Error):
        make_coherent(BaseState(), None, S("pow(-1/2)"))


def test_h0_on_bare_base():
    st = undressed(BaseState(M=2))
    assert apply_H0(st, zero(3), OMEGA).is_zero
    out = apply_H0(st, S("pow(2)"), OMEGA)
    (w, _), = [k for k, _ in out.items]
    assert w.markers and w.markers[0].startswith("dGx")


def test_h0_rejects_poles():
    with pytest.raises(ScalingViolation):
        apply_H0(undressed(BaseState()), zero(3), S("pow(-1)"))


def test_annihilator_kills_vacuum():
    assert apply_A(undressed(BaseState(M=1)), V).is_zero


def test_counterterm_cancels_annihilator():
    for M in (1, 2):
        st = make_coherent(BaseState(M=M), SDRESS)
        a = apply_A(st, V)
        assert a.space_tag == DressedState.FBAREX
        rest = add_states(a, apply_Einfty(st, V, OMEGA))
        # the scalar part cancels; two fermions keep the exchange potential
        assert [len(w.potentials) for w in rest.words()] == ([] if M == 1 else [1])


def test_creation_then_annihilation():
    u = S("window(0,1)")
    st = apply_Adagger_first(undressed(BaseState(M=1)), u)
    out = apply_A(st, u)
    # [A(u), A1+(u)] = <u,u> on a single fermion
    (key, c), = out.items
    assert key[0].creations == ()
    assert ef.as_complex(c) == pytest.approx(4 * math.pi / 3)


def test_class_mismatch():
    s = S("pow(-3)")
    phi = S("window(0,1)*pow(-1)")       # <s, phi> diverges at the origin
    with pytest.raises(ClassMismatchError):
        add_states(make_coherent(BaseState(), s), make_coherent(BaseState(), s, phi))


def test_scale_and_add_cancel():
    st = make_coherent(BaseState(M=2), SDRESS)
    assert add_states(st, scale_state(-1, st)).is_zero


def test_inner_coherent_closed_form():
    p1 = S("0.5*window(0,1)")
    p2 = S("(0.2-0.3j)*window(0.5,2)*pow(-1)")
    n1 = evaluate_convergent(pair(p1, p1)).real
    n2 = evaluate_convergent(pair(p2, p2)).real
    ref = np.exp(-(n1 + n2) / 2 + evaluate_convergent(pair(p1, p2)))
    assert ef.as_complex(inner_coherent(p1, p2)) == pytest.approx(ref, rel=1e-12)


def test_inner_coherent_against_fock_oracle():
    grid = GridSpec.log_gauss(1, 16, 0.1, 2.0, 6)
    p1 = S("0.15*pow(-1/2)*window(0.1,2.0)", 1)
    p2 = S("(0.1+0.05j)*pow(1)*window(0.1,2.0)", 1)
    _, a = _coherent(grid, p1)
    _, b = _coherent(grid, p2)
    assert abs(complex(np.vdot(a, b)) - ef.as_complex(inner_coherent(p1, p2))) < 1e-8


def test_weyl_merges_labels():
    st = make_coherent(BaseState(M=1), SDRESS)
    out = apply_W(st, S("0.5*window(0,1)"))
    (key, _), = out.items
    assert key[0].s == S("-pow(-3/2) + 0.5*window(0,1)")


def test_dump_is_deterministic():
    st = apply_Adagger_first(make_coherent(BaseState(M=2), SDRESS), S("window(0,1)"))
    again = apply_Adagger_first(make_coherent(BaseState(M=2), SDRESS), S("window(0,1)"))
    assert st.dump() == again.dump()
    assert len(st.dump().splitlines()) == 1
