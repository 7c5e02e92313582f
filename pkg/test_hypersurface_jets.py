import pytest

from errors import AlgebraError, NotNormalCoordinates, NotRankZero, NotReal
from exact_algebra import Scalar
from hypersurface_jets import (from_jets, index_key, is_admissible, is_pure, levi, nondegeneracy, parse_index_key,
                               parse_series, weight_of)

MODEL_R3 = "z1*z2*zb1 + z1*zb1*zb2 + 3*(z1^2*zb2 + z2*zb1^2)"
MODEL_R_HALF = "z1*z2*zb1 + z1*zb1*zb2 + 1/2*(z1^2*zb2 + z2*zb1^2)"


def test_index_keys():
    assert index_key((1, 0, 2, 0, 1)) == '1.0.2.0.1'
    assert parse_index_key('1.0.2.0.1') == (1, 0, 2, 0, 1)
    with pytest.raises(AlgebraError):
        parse_index_key('1.2')
    with pytest.raises(AlgebraError):
        parse_index_key('1.0.0.0.-1')


def test_weights_and_purity():
    assert weight_of((1, 0, 0, 0, 1)) == 4
    assert weight_of((1, 1, 1, 0, 0)) == 3
    assert is_pure((2, 1, 0, 0, 3))
    assert is_pure((0, 0, 1, 1, 0))
    assert not is_pure((1, 0, 0, 1, 0))


def test_reality_is_enforced():
    with pytest.raises(NotReal):
        parse_series("I*z1*zb1^2")
    assert parse_series("I*z1^2*zb1 - I*z1*zb1^2").cubic().coefficient((2, 0, 1, 0, 0)) == Scalar.rational(0, 1, 1)


def test_normal_coordinates_are_enforced():
    text = "z1^2 + zb1^2 + " + MODEL_R3
    with pytest.raises(NotNormalCoordinates):
        parse_series(text)
    s = parse_series(text, strict=False)
    assert s.coefficient((2, 0, 0, 0, 0)) == 1


def test_from_jets_divides_by_factorials():
    jets = {(1, 1, 1, 0, 0): 1, (1, 0, 1, 1, 0): 1, (2, 0, 0, 1, 0): 6, (0, 1, 2, 0, 0): 6}
    s = from_jets(jets, 6, strict=True)
    assert s == parse_series(MODEL_R3)
    assert s.jet_coefficient((2, 0, 0, 1, 0)) == 6
    with pytest.raises(AlgebraError):
        from_jets({(4, 0, 3, 0, 0): 1}, 6)


def test_coefficient_table():
    frame = parse_series(MODEL_R3).to_frame()
    assert list(frame.columns) == ['indice', 'monomio', 'peso', 'coeficiente', 'V_J']
    row = frame.set_index('indice').loc['2.0.0.1.0']
    assert row['coeficiente'] == '3'
    assert row['V_J'] == '6'
    assert set(frame['peso']) == {3}


def test_levi_form_vanishes_at_origin_for_models():
    data = levi(parse_series(MODEL_R3))
    assert data.rank_at_origin == 0
    assert not data.vanishes_identically


def test_levi_nondegenerate_hypersurface():
    data = levi(parse_series("z1*zb1", 4))
    assert data.rank_at_origin == 1
    assert data.constant_matrix()[0][0] == 1
    with pytest.raises(NotRankZero):
        nondegeneracy(parse_series("z1*zb1", 4))


def test_nondegeneracy_determinants():
    report = nondegeneracy(parse_series(MODEL_R3))
    assert report.delta12 == 6
    assert report.two_nondegenerate
    assert report.span_dimension == 2
    flat = nondegeneracy(parse_series("z1^2*zb1 + z1*zb1^2"))
    assert not flat.two_nondegenerate
    assert flat.span_dimension == 1


def test_admissibility_report():
    good = is_admissible(parse_series(MODEL_R3))
    assert good.ok
    assert good.excluded_r_half is False
    excluded = is_admissible(parse_series(MODEL_R_HALF))
    assert excluded.excluded_r_half is True
    assert not excluded.ok
    assert len(excluded.to_frame()) == 6


def test_admissibility_reports_pure_terms_of_any_weight():
    report = is_admissible(parse_series(MODEL_R3 + " + z1^4 + zb1^4", strict=False))
    assert not report.normal_coordinates
    assert report.pure_weight == 4
    assert not report.ok
    assert report.excluded_r_half is False
    assert len(report.to_frame()) == 6
    assert is_admissible(parse_series(MODEL_R3)).pure_weight is None
