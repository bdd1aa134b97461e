from fractions import Fraction

from hypothesis import settings, strategies as st

from extfock.symgrammar import Symbol, make_term

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")

# dyadic coefficients keep float arithmetic exact, so canonical forms compare exactly
DYADIC = st.sampled_from([1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 4.0, 0.25])
IMAG = st.sampled_from([0.0, 0.0, 1.0, -0.5])
EXPONENT = st.integers(-12, 4).map(lambda n: Fraction(n, 4))


@st.composite
def power_terms(draw, d=3, complex_coeff=True):
    c = draw(DYADIC) + 1j * (draw(IMAG) if complex_coeff else 0.0)
    return make_term(c, draw(EXPONENT))


@st.composite
def power_symbols(draw, d=3, max_terms=2, complex_coeff=True):
    n = draw(st.integers(1, max_terms))
    return Symbol.build([draw(power_terms(d, complex_coeff)) for _ in range(n)], d)


@st.composite
def single_terms(draw, d=3):
    """Exact-scaling single terms, optionally with a mass factor."""
    a = draw(EXPONENT)
    mass = ()
    if draw(st.booleans()):
        mass = ((draw(st.integers(-4, 4).map(lambda n: Fraction(n, 2))), draw(st.sampled_from([0.5, 1.0, 2.0]))),)
    return Symbol.build([make_term(draw(DYADIC), a, mass)], d)


@st.composite
def eren_elems(draw, d=3):
    """Random field elements: sums of c * exp(I[power symbol]) over an
    optional single-term denominator."""
    from extfock import erenfield as ef
    from extfock.renalg import normalize
    acc = {}
    for _ in range(draw(st.integers(1, 2))):
        e = normalize(draw(power_symbols(d))).integrand if draw(st.booleans()) else Symbol((), d)
        acc[e] = acc.get(e, 0) + draw(DYADIC)
    num = ef.ERenSum.build(acc, d)
    if num.is_zero:
        num = ef.ERenSum.const(1, d)
    if draw(st.booleans()):
        den = ef.ERenSum.const(1, d)
    else:
        den = ef.ERenSum.build({normalize(draw(power_symbols(d))).integrand: draw(DYADIC)}, d)
    return ef.make(num, den)
