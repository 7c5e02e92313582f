import pytest

from exact_algebra import get_backend
from prolongation import (VFDerivative, canonicalize_derivative, is_basis, phi_prolonged, prolong_along,
                          render, total_derivative, ProlongedCoefficient)

EXACT = get_backend('exact')
I, ONE = EXACT.i, EXACT.one


def test_render_notation():
    assert VFDerivative('xi1', (1, 0, 0, 0, 0, 0)).render() == 'xi1_z1'
    assert VFDerivative('eta', (0, 0, 0, 0, 2, 0)).render() == 'eta_u^2'
    assert VFDerivative('phi', (0,) * 6).render() == 'phi'
    assert render(phi_prolonged((0, 0, 0, 0, 0))) == 'phi'


def test_conjugate_derivative():
    d = VFDerivative('xi1', (1, 0, 0, 0, 1, 0))
    assert d.conjugate() == VFDerivative('xibar1', (0, 0, 1, 0, 1, 0))
    assert d.conjugate().conjugate() == d


def test_holomorphic_components_drop_antiholomorphic_derivatives():
    assert canonicalize_derivative('xi1', (0, 0, 1, 0, 0, 0)) == []
    assert canonicalize_derivative('xibar2', (1, 0, 0, 0, 0, 0)) == []
    assert canonicalize_derivative('eta', (1, 0, 1, 0, 0, 0)) == []


def test_v_derivatives_become_u_derivatives():
    assert canonicalize_derivative('xi1', (1, 0, 0, 0, 0, 1)) == [(I, VFDerivative('xi1', (1, 0, 0, 0, 1, 0)))]
    assert canonicalize_derivative('xibar1', (0, 0, 1, 0, 0, 1)) == [(-I, VFDerivative('xibar1', (0, 0, 1, 0, 1, 0)))]
    assert canonicalize_derivative('phi', (1, 0, 0, 0, 0, 0)) == [(-I, VFDerivative('eta', (1, 0, 0, 0, 0, 0)))]
    assert canonicalize_derivative('phi', (0, 0, 0, 0, 0, 1)) == [(ONE, VFDerivative('eta', (0, 0, 0, 0, 1, 0)))]


def test_basis_membership():
    assert is_basis(VFDerivative('xi1', (2, 0, 0, 0, 1, 0)))
    assert is_basis(VFDerivative('eta', (0, 0, 0, 0, 1, 1)))
    assert not is_basis(VFDerivative('phi', (1, 0, 0, 0, 0, 0)))
    assert not is_basis(VFDerivative('xi1', (0, 0, 0, 0, 0, 1)))
    with pytest.raises(ValueError):
        canonicalize_derivative('zeta', (0,) * 6)


def test_first_prolongation():
    phi = phi_prolonged((1, 0, 0, 0, 0))
    assert phi.J == (1, 0, 0, 0, 0)
    assert phi.coefficient([(1, 0, 0, 0, 0)], VFDerivative('xi1', (1, 0, 0, 0, 0, 0))) == -ONE
    assert phi.coefficient([(0, 1, 0, 0, 0)], VFDerivative('xi2', (1, 0, 0, 0, 0, 0))) == -ONE
    assert phi.coefficient([], VFDerivative('eta', (1, 0, 0, 0, 0, 0))) == -I


@pytest.mark.parametrize("path", [
    ['z1', 'zb1'],
    ['z1', 'z2', 'zb1'],
    ['u', 'z1', 'zb2'],
])
def test_prolongation_is_path_independent(path):
    assert prolong_along(path) == prolong_along(list(reversed(path)))


def test_cached_prolongation_matches_explicit_path():
    assert phi_prolonged((1, 0, 1, 0, 0)) == prolong_along(['z1', 'zb1'])
    assert phi_prolonged((2, 0, 1, 0, 0)) == prolong_along(['zb1', 'z1', 'z1'])


def test_conjugation_maps_to_conjugate_index():
    phi = phi_prolonged((2, 0, 1, 0, 0))
    assert phi.conjugate() == phi_prolonged((1, 0, 2, 0, 0))


def test_total_derivative_grows_jets():
    base = ProlongedCoefficient((0,) * 5, {(((1, 0, 0, 0, 0),), VFDerivative('xi1', (0,) * 6)): ONE})
    grown = total_derivative(base, 'zb1')
    assert grown.coefficient([(1, 0, 1, 0, 0)], VFDerivative('xi1', (0,) * 6)) == ONE
    with pytest.raises(ValueError):
        total_derivative(base, 'v')
