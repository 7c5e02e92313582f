import pytest

import equivalence
from branch_normalizer import normalize
from cross_sections import NORMALIZABLE, BranchInvariants, BranchTag, model, sample_invariants
from equivalence import NO, NON_SCALING_RESIDUAL, UNDETERMINED, YES, equivalent
from exact_algebra import Scalar
from hypersurface_jets import parse_series
from transform_engine import apply, random_map, scaling_map


def test_different_r_is_not_equivalent():
    a = model(BranchTag.A2ii1_prime, BranchInvariants(r=Scalar.of(3)), 5)
    b = model(BranchTag.A2ii1_prime, BranchInvariants(r=Scalar.of(2)), 5)
    decision = equivalent(a, b)
    assert decision.verdict == NO
    assert decision.distinguishing == ['r']
    assert not decision.equivalent


def test_different_branches_are_not_equivalent():
    a = model(BranchTag.A2ii3, sample_invariants(BranchTag.A2ii3), 4)
    b = model(BranchTag.A2ii5, sample_invariants(BranchTag.A2ii5), 4)
    decision = equivalent(a, b)
    assert decision.verdict == NO
    assert decision.distinguishing == ['tag']
    assert decision.to_structured()['witness'] is None


def test_same_model_is_equivalent_to_itself():
    s = model(BranchTag.A2ii2, sample_invariants(BranchTag.A2ii2), 4)
    decision = equivalent(s, s)
    assert decision.verdict == YES
    assert decision.verified
    assert decision.witness.is_identity()


@pytest.mark.slow
@pytest.mark.parametrize("tag", [BranchTag.A2ii1_prime, BranchTag.A2ii3, BranchTag.A2ii5])
def test_transformed_model_is_equivalent(tag):
    s = model(tag, sample_invariants(tag), 5)
    moved = apply(random_map(29, order=5, magnitude=1, density=0.3, with_linear_part=False), s)
    decision = equivalent(s, moved)
    assert decision.verdict == YES
    assert decision.verified


@pytest.mark.slow
def test_residual_scaling_links_normal_forms():
    tag = BranchTag.A2ii4
    base = model(tag, sample_invariants(tag), 5)
    a = parse_series(base.render() + " + u*z1*zb2 + u*z2*zb1", 5)
    b = apply(scaling_map(2, 2, 8, 5), a)
    decision = equivalent(a, b)
    assert decision.verdict == YES
    assert decision.verified


def perturbed(tag, extra, order, backend=None):
    base = model(tag, sample_invariants(tag), order)
    return parse_series(base.render() + " + " + extra, order, backend)


def test_unmatched_normal_forms_are_undetermined(monkeypatch):
    tag = BranchTag.A2ii5
    reference = normalize(model(tag, sample_invariants(tag), 5), 5)
    a = perturbed(tag, "z1*zb1*u", 5)
    b = parse_series(model(tag, sample_invariants(tag), 5).render() + " - z1*zb1*u", 5)
    results = {a: reference.copy(update={'normal_form': a}), b: reference.copy(update={'normal_form': b})}
    monkeypatch.setattr(equivalence, 'normalize', lambda s, order: results[s])
    decision = equivalent(a, b, 5)
    assert decision.verdict == UNDETERMINED
    assert decision.distinguishing == ['1.0.1.0.1']


@pytest.mark.slow
def test_moved_normal_form_is_never_rejected():
    tag = BranchTag.A2ii1_prime
    f = normalize(perturbed(tag, "2*z2*zb2*u + z1*zb1*z2*zb2", 6), 6).normal_form
    moved = apply(random_map(3, order=6, magnitude=1, density=0.2), f)
    decision = equivalent(f, moved, 6)
    assert decision.verdict == YES
    assert decision.verified


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("tag", NORMALIZABLE)
def test_perturbed_round_trip_with_linear_part(tag, seed, floating):
    reference = normalize(perturbed(tag, "z1*zb1*u + z1*z2*zb1*zb2", 6, floating), 6)
    f = reference.normal_form
    moved = apply(random_map(seed, order=6, magnitude=1, backend=floating, density=0.2), f)
    result = normalize(moved, 6)
    assert result.tag == tag
    assert result.invariants.same_as(reference.invariants)
    decision = equivalent(f, moved, 6)
    assert decision.verdict != NO
    if tag not in NON_SCALING_RESIDUAL:
        assert decision.verdict == YES
    if decision.verdict == YES:
        assert decision.verified
