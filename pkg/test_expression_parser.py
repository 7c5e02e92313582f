import pytest
from hypothesis import given
from hypothesis import strategies as st

from errors import ParseError
from exact_algebra import HOLO_VARIABLES, Poly, Scalar
from expression_parser import parse_assignment, parse_map_component, parse_poly, parse_scalar


def test_gaussian_rational_coefficients():
    p = parse_poly("z1^2*zb1 - 3/2*I*z2 + (1+I)*u")
    assert p.coefficient((2, 0, 1, 0, 0)) == 1
    assert p.coefficient((0, 1, 0, 0, 0)) == Scalar.rational(0, 1, -3, 2)
    assert p.coefficient((0, 0, 0, 0, 1)) == Scalar.rational(1, 1, 1, 1)


def test_conj_swaps_variables():
    assert parse_poly("conj(I*z1*zb2)") == parse_poly("-I*zb1*z2")
    assert parse_poly("z1*zb1 + conj(z1*zb1)") == parse_poly("2*z1*zb1")


def test_truncation_at_order():
    assert parse_poly("z1^4 + z2", order=3) == parse_poly("z2", order=3)
    assert parse_poly("(z1 + zb1)^5", order=4).is_zero()


def test_error_position():
    with pytest.raises(ParseError) as info:
        parse_poly("z1 + @")
    assert (info.value.line, info.value.column) == (1, 6)
    with pytest.raises(ParseError) as info:
        parse_poly("z1 +\n  q")
    assert (info.value.line, info.value.column) == (2, 3)


@pytest.mark.parametrize("text", ["", "z1 +", "(z1", "z1/z2", "1/0", "z1^-1", "x1"])
def test_rejected_inputs(text):
    with pytest.raises(ParseError):
        parse_poly(text)


def test_map_components_use_holomorphic_variables():
    p = parse_map_component("z1 + w^2 - I*z1*z2")
    assert p.variables == HOLO_VARIABLES
    assert p.coefficient((0, 0, 2)) == 1
    with pytest.raises(ParseError):
        parse_map_component("zb1")
    with pytest.raises(ParseError):
        parse_map_component("conj(z1)")


def test_scalars_and_assignments():
    assert parse_scalar("1/2-3/4*I") == Scalar.rational(1, 2, -3, 4)
    name, value = parse_assignment("lambda = 1+2*I")
    assert name == 'lambda'
    assert value == Scalar.rational(1, 1, 2, 1)
    with pytest.raises(ParseError):
        parse_assignment("r")
    with pytest.raises(ParseError):
        parse_scalar("z1")


coefficient = st.builds(lambda a, b, c, d: Scalar.rational(a, b, c, d),
                        st.integers(-5, 5), st.integers(1, 4), st.integers(-5, 5), st.integers(1, 4))
exponent = st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.integers(0, 1))


@given(st.dictionaries(exponent, coefficient, max_size=6))
def test_rendered_polynomials_parse_back(data):
    p = Poly.from_dict(data, 6)
    assert parse_poly(p.render(), 6) == p
