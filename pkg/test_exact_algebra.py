import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errors import AlgebraError, BackendMismatch, Infeasible, NeedsRadical, SubstitutionError
from exact_algebra import (HOLO_VARIABLES, Poly, Scalar, factorial_of, get_backend, invert_matrix, pack,
                           solve_linear, unpack)

small = st.integers(min_value=-9, max_value=9)
positive = st.integers(min_value=1, max_value=7)
gaussian = st.builds(lambda a, b, c, d: Scalar.rational(a, b, c, d), small, positive, small, positive)


@given(gaussian, gaussian, gaussian)
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c


@given(gaussian)
def test_conjugation_is_an_involution(a):
    assert a.conjugate().conjugate() == a
    assert (a * a.conjugate()).is_real()
    assert a * a.conjugate() == a.abs2()


@given(gaussian, gaussian)
def test_division_inverts_multiplication(a, b):
    if b.is_zero():
        return
    assert (a * b) / b == a


@given(gaussian)
def test_scalar_parse_inverts_render(a):
    assert Scalar.parse(a.render()) == a


def test_scalar_render_and_powers():
    z = Scalar.rational(1, 2, -3, 4)
    assert z.render() == '1/2-3/4*I'
    assert Scalar.rational(0, 1, 1).render() == '1*I'
    assert Scalar.of(2) ** -2 == Scalar.rational(1, 4)
    assert Scalar.of(3) == 3


def test_exact_roots():
    assert Scalar.rational(-7, 1, 24).sqrt() ** 2 == Scalar.rational(-7, 1, 24)
    assert Scalar.rational(-8, 27).cbrt() == Scalar.rational(-2, 3)
    with pytest.raises(NeedsRadical):
        Scalar.of(2).sqrt()
    with pytest.raises(NeedsRadical):
        Scalar.of(3).cbrt()


def test_float_backend_roots_and_tolerance(floating):
    two = Scalar.of(2, floating)
    root = two.sqrt()
    assert root * root == two
    assert floating.is_zero(floating.ctx.mpf(2) ** -220)
    assert not floating.is_zero(floating.ctx.mpf(2) ** -150)


def test_backend_mismatch_is_rejected(floating):
    with pytest.raises(BackendMismatch):
        Scalar.of(1) + Scalar.of(1, floating)


def test_pack_unpack():
    for exps in [(0, 0, 0, 0, 0), (3, 1, 0, 2, 1), (6, 0, 0, 0, 0)]:
        assert unpack(pack(exps), 5) == exps
    assert factorial_of((2, 0, 3, 0, 1)) == 12


def test_truncated_multiplication():
    z1 = Poly.variable('z1', 3)
    zb1 = Poly.variable('zb1', 3)
    p = (z1 + zb1) ** 4
    assert p.is_zero()
    q = (Poly.constant(1, 3) + z1) ** 3
    assert q.coefficient((3, 0, 0, 0, 0)) == 1
    assert q.coefficient((2, 0, 0, 0, 0)) == 3


def test_series_inverse():
    z1 = Poly.variable('z1', 5)
    unit = Poly.constant(1, 5) - z1
    inverse = unit.inverse()
    assert (unit * inverse) == Poly.constant(1, 5)
    assert inverse.coefficient((5, 0, 0, 0, 0)) == 1
    with pytest.raises(AlgebraError):
        z1.inverse()


def test_derivative_and_conjugate():
    p = Poly.from_dict({(2, 0, 1, 0, 0): Scalar.rational(0, 1, 1), (1, 0, 2, 0, 0): Scalar.rational(0, 1, -1)}, 4)
    assert p.conjugate() == p
    d = p.derivative('z1')
    assert d.coefficient((1, 0, 1, 0, 0)) == Scalar.rational(0, 1, 2)
    assert p.real_part() == p
    assert p.imag_part().is_zero()


def test_substitution():
    z1 = Poly.variable('z1', 4, variables=HOLO_VARIABLES)
    z2 = Poly.variable('z2', 4, variables=HOLO_VARIABLES)
    w = Poly.variable('w', 4, variables=HOLO_VARIABLES)
    p = z1 * z2 + w
    image = p.substitute({'z1': z1 + z2, 'z2': z2, 'w': w})
    assert image.coefficient((0, 2, 0)) == 1
    assert image.coefficient((1, 1, 0)) == 1
    with pytest.raises(SubstitutionError):
        p.substitute({'z1': z1})


def test_substitution_checks_only_occurring_variables():
    constant = Poly.constant(Scalar.rational(2, 3), 4, variables=HOLO_VARIABLES)
    assert constant.substitute({}) == constant
    z1 = Poly.variable('z1', 4, variables=HOLO_VARIABLES)
    z2 = Poly.variable('z2', 4, variables=HOLO_VARIABLES)
    image = (z1 * z1).substitute({'z1': z1 + z2})
    assert image.coefficient((1, 1, 0)) == 2
    with pytest.raises(SubstitutionError):
        z1.substitute({})


def test_solve_linear_and_nullspace():
    solution = solve_linear([({'a': 1, 'b': 1}, 3), ({'a': 1, 'b': -1}, 1)], ['a', 'b'])
    assert solution.assignment['a'] == 2
    assert solution.assignment['b'] == 1
    assert solution.rank == 2
    free = solve_linear([({'a': 1, 'b': 1}, 0)], ['a', 'b'])
    assert len(free.nullspace) == 1
    with pytest.raises(Infeasible):
        solve_linear([({'a': 1}, 1), ({'a': 1}, 2)], ['a'])


def test_invert_matrix(exact):
    m = [[exact.from_int(2), exact.from_int(1)], [exact.from_int(1), exact.from_int(1)]]
    inverse = invert_matrix(m, exact)
    assert inverse[0][0] == exact.from_int(1)
    assert inverse[0][1] == exact.from_int(-1)
    with pytest.raises(AlgebraError):
        invert_matrix([[exact.one, exact.one], [exact.one, exact.one]], exact)


@settings(max_examples=25)
@given(st.integers(min_value=128, max_value=512))
def test_float_backend_minimum_precision(bits):
    backend = get_backend('float', bits)
    assert backend.precision_bits == bits
