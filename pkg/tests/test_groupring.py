from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from conftest import el
from foelner_rank import GF, QQ, QQi, GroupRingElement, GroupRingMatrix, make_group
from foelner_rank.errors import ParseError, PreconditionError
from foelner_rank.groupring import format_element, parse_element, parse_matrix
from foelner_rank.groups import word_eval

X, Y = sympy.symbols("X Y")
SHIFT = 20  # exponent offset turning Laurent polynomials into polynomials


def to_poly(a):
    """Z^d element -> sympy polynomial (independent convolution oracle)."""
    out = 0
    for x, c in a.terms.items():
        mono = 1
        for v, e in zip((X, Y), x.nf):
            mono *= v ** (e + SHIFT)
        out += sympy.Rational(c.numerator, c.denominator) * mono
    return sympy.expand(out)


def random_element(g, field=QQ, max_terms=4, max_len=3):
    coeff = st.fractions(min_value=-5, max_value=5, max_denominator=4)
    word = st.lists(st.sampled_from(g.generators), max_size=max_len)
    return st.lists(st.tuples(coeff, word), max_size=max_terms).map(
        lambda ts: sum((GroupRingElement(g, field, {word_eval(g, w): c}) for c, w in ts),
                       GroupRingElement(g, field)))


Z1g, Z2g, ZCg, H3g = (make_group(s) for s in ("Z^1", "Z^2", "Z^1 x C2", "H3"))


@given(random_element(Z2g), random_element(Z2g))
def test_product_matches_polynomial_oracle(a, b):
    assert to_poly(a * b) == sympy.expand(to_poly(a) * to_poly(b) / (X ** SHIFT * Y ** SHIFT))


@pytest.mark.parametrize("g", [Z1g, ZCg, H3g], ids=str)
@given(data=st.data())
def test_ring_axioms(g, data):
    a, b, c = (data.draw(random_element(g)) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a + b) * c == a * c + b * c
    assert a - a == 0


@pytest.mark.parametrize("g", [Z1g, Z2g], ids=str)
@given(data=st.data())
def test_free_abelian_group_ring_is_a_domain(g, data):
    a = data.draw(random_element(g).filter(lambda e: not e.is_zero()))
    b = data.draw(random_element(g).filter(lambda e: not e.is_zero()))
    assert not (a * b).is_zero()


@given(random_element(H3g), random_element(H3g))
def test_support_radius_subadditive(a, b):
    assert (a * b).support_radius() <= a.support_radius() + b.support_radius()
    for x in a.support():
        assert x.word_length() <= a.support_radius()


@pytest.mark.parametrize("g", [ZCg, H3g], ids=str)
@given(data=st.data())
def test_star_is_involutive_antiautomorphism(g, data):
    a, b = data.draw(random_element(g, QQi)), data.draw(random_element(g, QQi))
    assert a.star().star() == a
    assert (a * b).star() == b.star() * a.star()


def test_product_examples(Z1, ZC, H3):
    assert el(Z1, "g0 - 1") * el(Z1, "g0 + 1") == el(Z1, "g0^2 - 1")
    assert (el(ZC, "1 + t") * el(ZC, "1 - t")).is_zero()
    lhs = el(H3, "x*y - y*x")
    yx = word_eval(H3, ["y", "x"])
    rhs = GroupRingElement.basis(yx) * el(H3, "z - 1")
    assert lhs == rhs


def test_star_examples(Z1, ZC):
    assert el(Z1, "g0 - 1").star() == el(Z1, "g0^-1 - 1")
    assert el(Z1, "(2 + 1 i)*g0", QQi).star() == el(Z1, "(2 - 1 i)*g0^-1", QQi)
    a = el(ZC, "1 + t")
    assert a.star() == a
    # no conjugation over GF(p): only the inversion of group elements
    assert el(Z1, "3*g0", GF(7)).star() == el(Z1, "3*g0^-1", GF(7))


def test_parse_examples(Z2):
    a = el(Z2, "2*g0*g1^-1 + (1/3)")
    assert a.coeff(Z2.element((1, -1))) == 2
    assert a.coeff(Z2.identity) == Fraction(1, 3)
    assert len(a.terms) == 2


@pytest.mark.parametrize("g", [Z1g, Z2g, ZCg, H3g], ids=str)
@given(data=st.data())
def test_printer_round_trip(g, data):
    for field in (QQ, QQi):
        a = data.draw(random_element(g, field))
        assert parse_element(g, field, format_element(a)) == a


def test_canonical_order(Z1):
    assert str(el(Z1, "g0^2 + g0^-1 + 3 + g0")) == "3 + g0^-1 + g0 + g0^2"


@pytest.mark.parametrize("text,pos", [("g0 +", 4), ("2 * * g0", 4), ("g9", 0), ("(1/0)", None)])
def test_parse_errors(Z1, text, pos):
    with pytest.raises(ParseError) as exc:
        el(Z1, text)
    if pos is not None:
        assert exc.value.pos == pos


def test_mismatch_errors(Z1, Z2):
    with pytest.raises(PreconditionError):
        el(Z1, "g0") + el(Z2, "g0")
    with pytest.raises(PreconditionError):
        el(Z1, "g0") * el(Z1, "g0", QQi)


def test_matrix_ops(Z1):
    D = parse_matrix(Z1, QQ, "g0 - 1, 0; 0, 0")
    assert D * D == parse_matrix(Z1, QQ, "g0^2 - 2*g0 + 1, 0; 0, 0")
    one = parse_matrix(Z1, QQ, "g0 + 2")
    assert (one * one).rows[0][0] == el(Z1, "g0 + 2") * el(Z1, "g0 + 2")


@given(data=st.data())
def test_matrix_star_reverses_products(data):
    g = Z1g
    ents = [data.draw(random_element(g, QQi, max_terms=3)) for _ in range(8)]
    A = GroupRingMatrix([ents[0:2], ents[2:4]])
    B = GroupRingMatrix([ents[4:6], ents[6:8]])
    assert (A * B).star() == B.star() * A.star()


def test_matrix_shape_mismatch(Z1):
    A = parse_matrix(Z1, QQ, "1, 0; 0, 1")
    B = parse_matrix(Z1, QQ, "1, 0, 0")
    with pytest.raises(PreconditionError):
        A * B
