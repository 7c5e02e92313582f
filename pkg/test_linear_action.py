from exact_algebra import Scalar
from hypersurface_jets import parse_series
from linear_action import (LinearAction, RowEchelon, Unknown, holomorphic_monomials, representatives, row_parts,
                           weight_action, weight_keys)

CUBIC = "z1^2*zb1 + z1*zb1^2"


def test_weighted_monomials():
    assert holomorphic_monomials(3, 6) == [(3, 0, 0), (2, 1, 0), (1, 2, 0), (0, 3, 0), (0, 0, 1)]
    assert holomorphic_monomials(3, 2) == [(0, 0, 1)]


def test_conjugation_representatives():
    reps = representatives(3, 6)
    assert len(reps) == 11
    assert (0, 0, 0, 0, 1) in reps
    assert (2, 0, 1, 0, 0) in reps
    assert (1, 0, 2, 0, 0) not in reps
    assert row_parts((1, 0, 1, 0, 1)) == ('re',)
    assert row_parts((2, 0, 1, 0, 0)) == ('re', 'im')


def test_row_echelon():
    echelon = RowEchelon()
    one, two = Scalar.of(1).value, Scalar.of(2).value
    zero = Scalar.of(0).value
    assert echelon.add([one, two, zero])
    assert echelon.add([zero, one, one])
    assert not echelon.add([one, Scalar.of(3).value, one])
    assert echelon.rank == 2
    assert echelon.contains([two, Scalar.of(4).value, zero])


def test_vertical_scaling_reproduces_the_series():
    s = parse_series(CUBIC, 4)
    g = Unknown('g', (0, 0, 1), 're')
    action = LinearAction(s, [g])
    assert action.effect(g) == s.poly


def test_horizontal_scaling_is_euler_operator():
    s = parse_series(CUBIC, 4)
    f = Unknown('f1', (1, 0, 0), 're')
    action = LinearAction(s, [f])
    assert action.effect(f) == s.poly.scale(-3)


def test_map_from_vector():
    s = parse_series(CUBIC, 4)
    unknowns = [Unknown('g', (0, 0, 1), 're'), Unknown('f2', (0, 1, 0), 'im')]
    action = LinearAction(s, unknowns)
    f = action.map_from([Scalar.of(1).value, Scalar.of(2).value])
    assert f.w.coefficient((0, 0, 1)) == 2
    assert f.z2.coefficient((0, 1, 0)) == Scalar.rational(1, 1, 2, 1)


def test_weight_action_is_cached():
    s = parse_series("z1*z2*zb1 + z1*zb1*zb2 + 3*(z1^2*zb2 + z2*zb1^2)", 6)
    first = weight_action(s.cubic(), 4, 6)
    assert weight_action(s.cubic(), 4, 6) is first
    keys = weight_keys(4, 6)
    assert 0 < first.rank(keys) <= len(keys)
