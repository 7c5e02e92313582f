import pytest

from errors import NotSolvable
from exact_algebra import get_backend
from hypersurface_jets import parse_series
from maurer_cartan import (FiberCalculus, Ledger, LiftedPoly, MCExpr, MCSymbol, basis_symbols, delta_relation,
                           elementary_ledger, fiber_ledger, recurrence, relation_indices, relative_invariant_check,
                           render_lifted, restrict_to_fiber, solve_for)

EXACT = get_backend('exact')
ONE, I = EXACT.one, EXACT.i
MODEL = "z1*z2*zb1 + z1*zb1*zb2 + 3*(z1^2*zb2 + z2*zb1^2)"
FIBER = MODEL + " + z1^2*zb1^2 + u*z1*zb1 + I*z1*z2*zb1^2 - I*z1^2*zb1*zb2 + 2*u*z1^2*zb2 + 2*u*z2*zb1^2"

MU1_Z1 = MCSymbol('mu1', (1, 0, 0, 0, 0, 0))
ALPHA_U = MCSymbol('alpha', (0, 0, 0, 0, 1, 0))


def test_symbol_rendering_and_conjugation():
    assert MU1_Z1.render() == 'mu1_Z1'
    assert MU1_Z1.re().render() == 'Re(mu1_Z1)'
    bar = MU1_Z1.conjugate()
    assert bar == MCSymbol('mubar1', (0, 0, 1, 0, 0, 0))
    assert bar.is_conjugate_side
    assert bar.re() == MU1_Z1.re()
    assert ALPHA_U.is_real
    assert ALPHA_U.coordinates() == [ALPHA_U]
    assert render_lifted((1, 0, 1, 0, 0)) == 'V_Z1Zb1'


def test_lifted_polynomials():
    a, b = LiftedPoly.jet((1, 0, 1, 0, 0)), LiftedPoly.jet((0, 1, 0, 1, 0))
    product = (a * b).scale(EXACT.from_int(2)) - a
    assert product.render() == '-V_Z1Zb1 + 2*V_Z2Zb2*V_Z1Zb1'
    assert product.jets() == [(0, 1, 0, 1, 0), (1, 0, 1, 0, 0)]
    assert a.conjugate() == a
    value = product.substitute(lambda K: EXACT.from_int(3))
    assert value.is_constant()
    assert value.constant_value() == EXACT.from_int(15)


def test_levi_entry_recurrence():
    rel = recurrence((1, 0, 1, 0, 0))
    assert rel.horizontal == (1, 0, 1, 0, 0)
    assert rel.coefficient(MU1_Z1) == LiftedPoly({((1, 0, 1, 0, 0),): -ONE})
    assert rel.coefficient(MCSymbol('mu2', (1, 0, 0, 0, 0, 0))) == LiftedPoly({((0, 1, 1, 0, 0),): -ONE})
    assert rel.render().startswith('varpi_Z1Zb1')


def test_third_order_recurrence_with_elementary_ledger():
    ledger = elementary_ledger()
    rel = recurrence((2, 0, 1, 0, 0), ledger, modulo_horizontal=True)
    assert rel.horizontal is None
    mu1 = rel.coefficient(MCSymbol('mu1', (2, 0, 0, 0, 0, 0)))
    assert mu1.terms[((1, 0, 1, 0, 0),)] == -ONE
    mubar2 = rel.coefficient(MCSymbol('mubar2', (0, 0, 0, 0, 1, 0)))
    assert mubar2.terms[((1, 0, 0, 1, 0), (1, 0, 1, 0, 0))] == 2 * I
    assert all(s.order >= 1 for s in rel.symbols())


def test_relative_invariant():
    ok, difference = relative_invariant_check()
    assert ok
    assert difference.real_form().is_zero()


def test_relation_indices():
    assert relation_indices(2) == [(1, 0, 1, 0, 0), (1, 0, 0, 1, 0), (0, 1, 0, 1, 0)]
    indices = relation_indices(3)
    assert len(indices) == 9
    assert all(J[0] + J[1] >= J[2] + J[3] for J in indices)


@pytest.mark.parametrize("J", [(1, 0, 1, 0, 0), (1, 0, 0, 1, 0), (2, 0, 1, 0, 0), (1, 1, 0, 1, 0),
                               (1, 0, 1, 0, 1)])
def test_fiber_route_matches_symbolic_recurrence(J):
    fiber = parse_series(FIBER, 6)
    calculus = FiberCalculus(fiber)
    values = calculus.fiber_values()
    symbolic = recurrence(J).substitute_values(lambda K: values.get(K, EXACT.zero)).modulo_horizontal()
    assert symbolic == calculus.relation(J).modulo_horizontal()


def test_basis_symbols_are_sorted_by_order():
    symbols = basis_symbols(2)
    assert [s.order for s in symbols] == sorted(s.order for s in symbols)
    assert MU1_Z1 in symbols
    assert ALPHA_U in symbols
    assert MCSymbol('alpha', (0, 0, 0, 0, 0, 1)) in symbols


def test_ledger_insert_and_reduce():
    ledger = Ledger()
    solved = ledger.insert({MU1_Z1.re(): EXACT.from_int(2), ALPHA_U: ONE}, 'teste', '0')
    assert solved == MU1_Z1.re()
    assert ledger.is_solved(MU1_Z1.re())
    assert ledger.insert({MU1_Z1.re(): EXACT.from_int(2), ALPHA_U: ONE}) is None
    reduced = ledger.reduce(MCExpr.of([(MU1_Z1, EXACT.from_int(2))]))
    assert reduced.coefficient(ALPHA_U).constant_value() == -ONE
    assert reduced.coefficient(MU1_Z1.im()).constant_value() == 2 * I
    trace = ledger.trace()
    assert list(trace.columns) == ['alvo', 'valor', 'simbolo', 'expressao']
    assert trace.iloc[0]['simbolo'] == 'Re(mu1_Z1)'


def test_solve_for_on_fiber():
    fiber = parse_series(MODEL, 4)
    ledger = fiber_ledger(fiber)
    rel = FiberCalculus(fiber).relation((2, 0, 0, 1, 0))
    solve_for(rel, ALPHA_U, EXACT.zero, ledger)
    assert ledger.is_solved(ALPHA_U)
    assert ledger.phantoms[(2, 0, 0, 1, 0)] == EXACT.zero
    with pytest.raises(NotSolvable):
        solve_for(FiberCalculus(fiber).relation((2, 0, 2, 0, 0)), MCSymbol('alpha', (0, 0, 0, 0, 4, 0)),
                  EXACT.zero, ledger)


def test_restriction_reports_unknown_jets():
    ledger = Ledger(fiber={(1, 0, 1, 0, 0): EXACT.zero})
    expr = restrict_to_fiber(recurrence((1, 0, 1, 0, 0)), ledger)
    assert (0, 1, 1, 0, 0) in expr.unresolved


def test_delta_transforms_as_relative_invariant():
    fiber = parse_series(MODEL, 4)
    value, d_delta = delta_relation('12', fiber)
    assert value == EXACT.from_int(6)
    assert not d_delta.is_zero()
