import pytest

from branch_normalizer import classify_cubic
from cross_sections import (NORMALIZABLE, RESIDUAL_DIM, BranchInvariants, BranchTag, check_parameters,
                            column_priority, complete_cross_section, conditions_frame, cross_section,
                            eta_is_canonical, model, model_coefficients, read_invariants, residual_symbols,
                            sample_invariants, violations)
from errors import ConstraintViolation, ExcludedRHalf
from exact_algebra import Scalar


def test_tag_parsing():
    assert BranchTag.parse("A'.ii.1") == BranchTag.A2ii1_prime
    assert BranchTag.parse("A''") == BranchTag.A2ii1_doubleprime
    assert BranchTag.parse("A2ii4") == BranchTag.A2ii4
    with pytest.raises(ConstraintViolation):
        BranchTag.parse("B.i")
    assert BranchTag.A2ii5.normalizable
    assert not BranchTag.Excluded_r_half.normalizable
    assert len(NORMALIZABLE) == 6


@pytest.mark.parametrize("tag, values, error", [
    (BranchTag.A2ii1_prime, {'r': Scalar.of(1)}, ConstraintViolation),
    (BranchTag.A2ii1_prime, {'r': Scalar.rational(1, 2)}, ExcludedRHalf),
    (BranchTag.A2ii1_prime, {'r': Scalar.of(-2)}, ConstraintViolation),
    (BranchTag.A2ii1_prime, {}, ConstraintViolation),
    (BranchTag.A2ii3, {'lam': Scalar.of(0)}, ConstraintViolation),
    (BranchTag.A2ii4, {'sigma': Scalar.of(2), 'nu': Scalar.rational(1, 2)}, ConstraintViolation),
    (BranchTag.A2ii5, {'eta': Scalar.of(-1)}, ConstraintViolation),
    (BranchTag.NotInClass, {}, ConstraintViolation),
])
def test_parameter_constraints(tag, values, error):
    with pytest.raises(error):
        check_parameters(tag, BranchInvariants(**values))


def test_canonical_eta_sector():
    assert eta_is_canonical(Scalar.of(0))
    assert eta_is_canonical(Scalar.of(2))
    assert eta_is_canonical(Scalar.rational(1, 1, 1))
    assert eta_is_canonical(Scalar.rational(1, 1, -1))
    assert not eta_is_canonical(Scalar.rational(1, 1, 2))
    assert not eta_is_canonical(Scalar.of(-1))


def test_model_coefficients():
    data = model_coefficients(BranchTag.A2ii2, BranchInvariants())
    assert data[(2, 0, 1, 0, 0)] == Scalar.rational(0, 1, 1)
    assert data[(1, 0, 2, 0, 0)] == Scalar.rational(0, 1, -1)
    data = model_coefficients(BranchTag.A2ii4, sample_invariants(BranchTag.A2ii4))
    assert data[(2, 0, 0, 1, 0)] == Scalar.rational(0, 1, 1)
    assert data[(0, 1, 2, 0, 0)] == Scalar.rational(0, 1, -1)
    assert data[(0, 2, 1, 0, 0)] == 2


@pytest.mark.parametrize("tag", NORMALIZABLE)
def test_models_classify_into_their_branch(tag):
    inv = sample_invariants(tag)
    s = model(tag, inv, 4)
    assert classify_cubic(s.cubic()).tag == tag
    assert read_invariants(tag, s.cubic()).same_as(inv)


@pytest.mark.parametrize("tag", NORMALIZABLE)
def test_models_satisfy_their_cross_section(tag):
    inv = sample_invariants(tag)
    s = model(tag, inv, 5)
    literal = cross_section(tag, inv, 5)
    assert violations(literal, s) == []
    assert {c.origin for c in literal if c.weight == 3} == {'pin', 'pure'}
    complete = complete_cross_section(tag, inv, 5)
    assert violations(complete, s) == []
    assert len(complete) >= len(literal)
    assert any(c.origin == 'pure' for c in complete)


def test_complete_cross_section_is_cached_by_copy():
    inv = sample_invariants(BranchTag.A2ii3)
    first = complete_cross_section(BranchTag.A2ii3, inv, 4)
    first[0].active = not first[0].active
    second = complete_cross_section(BranchTag.A2ii3, inv, 4)
    assert second[0].active != first[0].active


def test_conditions_table():
    inv = sample_invariants(BranchTag.A2ii1_prime)
    s = model(BranchTag.A2ii1_prime, inv, 4)
    frame = conditions_frame(cross_section(BranchTag.A2ii1_prime, inv, 4), s)
    assert list(frame.columns) == ['indice', 'condicao', 'peso', 'origem', 'ativa', 'alvo', 'valor']
    pin = frame.set_index('indice').loc['2.0.0.1.0']
    assert pin['alvo'] == '3'
    assert pin['valor'] == '3'


@pytest.mark.parametrize("tag", NORMALIZABLE)
def test_residual_forms_match_residual_dimension(tag):
    residual = residual_symbols(tag)
    assert len(residual) == RESIDUAL_DIM[tag]
    key = column_priority(tag)
    assert all(key(s)[1] == 1 for s in residual)
