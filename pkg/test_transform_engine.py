import pytest

from errors import AlgebraError, SingularLinearPart
from exact_algebra import HOLO_VARIABLES, Poly, Scalar
from hypersurface_jets import parse_series
from transform_engine import (HoloMapJet, apply, apply_linear, compose, identity, invert, linear_map, linear_part,
                              parse_map, random_map, scaling_map, swap_map, transform_cubic)

MODEL = "z1*z2*zb1 + z1*zb1*zb2 + 3*(z1^2*zb2 + z2*zb1^2)"
WITH_TAIL = MODEL + " + z1^2*zb1^2 + u*z1*zb1 + I*z1*z2*zb1^2 - I*z1^2*zb1*zb2"


def test_identity_render():
    assert identity(2).render() == ['Z1 = z1', 'Z2 = z2', 'W = w']
    assert identity(4).is_identity()
    assert not swap_map(4).is_identity()


def test_parse_map_validation():
    f = parse_map(["z1 + z2^2", "z2", "w + z1*w"], 4)
    assert f.z1.coefficient((0, 2, 0)) == 1
    with pytest.raises(AlgebraError):
        parse_map(["z1", "z2"], 4)
    with pytest.raises(AlgebraError):
        parse_map(["1 + z1", "z2", "w"], 4)


def test_linear_part():
    f = linear_map([[1, 2], [0, Scalar.rational(0, 1, 1)]], 3, 4)
    jac = linear_part(f)
    assert jac[0][1] == 2
    assert jac[1][1] == Scalar.rational(0, 1, 1)
    assert jac[2][2] == 3


@pytest.mark.parametrize("seed", [1, 7, 42])
def test_inverse_composes_to_identity(seed):
    f = random_map(seed, order=4)
    g = invert(f)
    assert compose(f, g) == identity(4)
    assert compose(g, f) == identity(4)


def test_singular_linear_part():
    z1 = Poly.variable('z1', 3, variables=HOLO_VARIABLES)
    w = Poly.variable('w', 3, variables=HOLO_VARIABLES)
    with pytest.raises(SingularLinearPart):
        invert(HoloMapJet(z1, z1 * z1, w))


def test_random_map_is_reproducible():
    assert random_map(5, order=4) == random_map(5, order=4)
    plain = random_map(5, order=4, with_linear_part=False)
    assert linear_part(plain)[0][0] == 1
    assert linear_part(plain)[0][1] == 0
    pure = [exps for exps, _ in plain.w.items() if exps[0] + exps[1] + 3 * exps[2] <= 3]
    assert pure == [(0, 0, 1)]


def test_identity_action():
    s = parse_series(WITH_TAIL, 4)
    assert apply(identity(4), s) == s
    assert apply(identity(4), s).normal_coordinates


def test_action_flags_lost_normal_coordinates():
    s = parse_series(MODEL, 4)
    image = apply(parse_map(["z1", "z2", "w + z1*w"], 4), s)
    assert not image.normal_coordinates
    assert image.coefficient((1, 0, 0, 0, 1)) != 0


def test_swap_action():
    s = parse_series(MODEL, 4)
    swapped = apply(swap_map(4), s)
    assert swapped == parse_series("z2*z1*zb2 + z2*zb2*zb1 + 3*(z2^2*zb1 + z1*zb2^2)", 4)


def test_scaling_matches_linear_action():
    s = parse_series(WITH_TAIL, 4)
    f = scaling_map(2, Scalar.rational(0, 1, 1), 3, 4)
    assert apply(f, s) == apply_linear([[2, 0], [0, Scalar.rational(0, 1, 1)]], 3, s)
    cubic = transform_cubic(s.cubic(), [[2, 0], [0, 1]], 1)
    assert cubic.coefficient((2, 0, 0, 1, 0)) == Scalar.rational(3, 4)


def test_apply_respects_composition():
    s = parse_series(WITH_TAIL, 4)
    f = random_map(3, order=4, magnitude=1, density=0.2)
    g = random_map(11, order=4, magnitude=1, density=0.2)
    assert apply(compose(f, g), s) == apply(f, apply(g, s))


@pytest.mark.slow
def test_round_trip_through_inverse():
    s = parse_series(WITH_TAIL, 5)
    f = random_map(23, order=5, magnitude=1, density=0.25)
    assert apply(invert(f), apply(f, s)) == s


def test_float_backend_agrees_with_exact(floating):
    s = parse_series(WITH_TAIL, 4)
    f = random_map(9, order=4, magnitude=1, density=0.2)
    exact_image = apply(f, s)
    float_image = apply(f.to_backend(floating), s.to_backend(floating))
    assert float_image == exact_image.to_backend(floating)
