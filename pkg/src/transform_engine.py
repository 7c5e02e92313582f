import random
from typing import Any, Dict, List, Sequence, Tuple

from errors import AlgebraError, GraphDegenerate, SingularLinearPart
from exact_algebra import (HOLO_VARIABLES, JET_VARIABLES, MonomialTable, Poly, Scalar, coerce_raw,
                           get_backend, invert_matrix, unpack)
from expression_parser import parse_map_component
from hypersurface_jets import JetSeries

COMPONENT_NAMES = ('Z1', 'Z2', 'W')


class HoloMapJet:
    """Jato truncado de biholomorfismo (Z1, Z2, W)(z1, z2, w) que fixa a origem"""

    def __init__(self, z1: Poly, z2: Poly, w: Poly):
        components = (z1, z2, w)
        for component in components:
            if component.variables != HOLO_VARIABLES:
                raise AlgebraError("Componentes devem usar as variáveis (z1, z2, w)")
            if not component.constant_term().is_zero():
                raise AlgebraError("A aplicação deve preservar a origem")
        self.components = components
        self.order = min(c.order for c in components)
        self.backend = z1.backend

    @property
    def z1(self) -> Poly:
        return self.components[0]

    @property
    def z2(self) -> Poly:
        return self.components[1]

    @property
    def w(self) -> Poly:
        return self.components[2]

    def bindings(self) -> Dict[str, Poly]:
        return dict(zip(HOLO_VARIABLES, self.components))

    def with_order(self, order: int) -> 'HoloMapJet':
        return HoloMapJet(*(c.with_order(order) for c in self.components))

    def to_backend(self, backend) -> 'HoloMapJet':
        return HoloMapJet(*(c.to_backend(backend) for c in self.components))

    def is_identity(self) -> bool:
        return self == identity(self.order, self.backend)

    def __eq__(self, other):
        if not isinstance(other, HoloMapJet):
            return NotImplemented
        return all(a == b for a, b in zip(self.components, other.components))

    def __hash__(self):
        return hash(self.components)

    def render(self) -> List[str]:
        return [f"{name} = {c.render()}" for name, c in zip(COMPONENT_NAMES, self.components)]

    def __repr__(self):
        return 'HoloMapJet(' + '; '.join(self.render()) + ')'


# ---------------------------------------------------------------------------
# Construtores
# ---------------------------------------------------------------------------

def _var(name: str, order: int, backend) -> Poly:
    return Poly.variable(name, order, backend, HOLO_VARIABLES)


def identity(order: int = 6, backend=None) -> HoloMapJet:
    backend = backend or get_backend('exact')
    return HoloMapJet(*(_var(name, order, backend) for name in HOLO_VARIABLES))


def linear_map(matrix: Sequence[Sequence[Any]], c_w: Any, order: int = 6, backend=None) -> HoloMapJet:
    """Z = B z, W = c_w w"""
    backend = backend or get_backend('exact')
    z = [_var('z1', order, backend), _var('z2', order, backend)]
    rows = [z[0].scale(matrix[i][0]) + z[1].scale(matrix[i][1]) for i in range(2)]
    return HoloMapJet(rows[0], rows[1], _var('w', order, backend).scale(c_w))


def swap_map(order: int = 6, backend=None) -> HoloMapJet:
    """Troca z1 <-> z2"""
    return linear_map([[0, 1], [1, 0]], 1, order, backend)


def scaling_map(a: Any, b: Any, c_w: Any, order: int = 6, backend=None) -> HoloMapJet:
    return linear_map([[a, 0], [0, b]], c_w, order, backend)


def parse_map(texts: Sequence[str], order: int = 6, backend=None) -> HoloMapJet:
    """Três strings polinomiais em (z1, z2, w)"""
    if len(texts) != 3:
        raise AlgebraError("Uma aplicação tem exatamente três componentes")
    return HoloMapJet(*(parse_map_component(text, order, backend) for text in texts))


def linear_part(f: HoloMapJet) -> List[List[Scalar]]:
    """Jacobiana 3×3 na origem"""
    units = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
    return [[c.coefficient(unit) for unit in units] for c in f.components]


def random_map(seed: int, order: int = 6, magnitude: int = 2, backend=None,
               with_linear_part: bool = True, density: float = 0.35) -> HoloMapJet:
    """Aplicação admissível pseudo-aleatória: W sem termos puros de peso ≤ 3 e coeficiente real em w"""
    backend = backend or get_backend('exact')
    rng = random.Random(seed)

    def coefficient():
        return backend.from_rational(rng.randint(-magnitude, magnitude), rng.choice((1, 2)),
                                     rng.randint(-magnitude, magnitude), rng.choice((1, 2)))

    if with_linear_part:
        while True:
            matrix = [[coefficient() for _ in range(2)] for _ in range(2)]
            if not backend.is_zero(matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]):
                break
        c_w = backend.from_int(rng.choice([k for k in range(-magnitude, magnitude + 1) if k]))
    else:
        matrix = [[backend.one, backend.zero], [backend.zero, backend.one]]
        c_w = backend.one
    base = linear_map(matrix, c_w, order, backend)
    extra: List[Dict[Tuple[int, ...], Any]] = [{}, {}, {}]
    for degree in range(2, order + 1):
        for a1 in range(degree + 1):
            for a2 in range(degree + 1 - a1):
                b = degree - a1 - a2
                for index in range(3):
                    if index == 2 and a1 + a2 + 3 * b <= 3:
                        continue
                    if rng.random() < density:
                        extra[index][(a1, a2, b)] = coefficient()
    parts = [c + Poly.from_dict(e, order, backend, HOLO_VARIABLES) for c, e in zip(base.components, extra)]
    return HoloMapJet(*parts)


# ---------------------------------------------------------------------------
# Composição e inversão
# ---------------------------------------------------------------------------

def compose(f: HoloMapJet, g: HoloMapJet) -> HoloMapJet:
    """f∘g truncada"""
    order = min(f.order, g.order)
    bindings = {name: c.with_order(order) for name, c in g.bindings().items()}
    return HoloMapJet(*(c.with_order(order).substitute(bindings) for c in f.components))


def invert(f: HoloMapJet) -> HoloMapJet:
    """Reversão de série: g = L⁻¹(x − N(g)) iterada até a ordem"""
    backend = f.backend
    order = f.order
    linear = [[entry.value for entry in row] for row in linear_part(f)]
    try:
        inverse = invert_matrix(linear, backend)
    except AlgebraError:
        raise SingularLinearPart("Parte linear singular")
    x = [_var(name, order, backend) for name in HOLO_VARIABLES]
    linear_f = [sum((x[j].scale(linear[i][j]) for j in range(3)), Poly.zero(order, backend, HOLO_VARIABLES))
                for i in range(3)]
    nonlinear = [c - lf for c, lf in zip(f.components, linear_f)]

    def apply_inverse(vector: List[Poly]) -> List[Poly]:
        return [sum((vector[j].scale(inverse[i][j]) for j in range(3)), Poly.zero(order, backend, HOLO_VARIABLES))
                for i in range(3)]

    g = apply_inverse(x)
    if all(n.is_zero() for n in nonlinear):
        return HoloMapJet(*g)
    for _ in range(order):
        bindings = dict(zip(HOLO_VARIABLES, g))
        correction = [n.substitute(bindings) for n in nonlinear]
        g = apply_inverse([xi - ci for xi, ci in zip(x, correction)])
    return HoloMapJet(*g)


# ---------------------------------------------------------------------------
# Ação sobre a função definidora
# ---------------------------------------------------------------------------

def _restricted_components(f: HoloMapJet, s: JetSeries) -> List[Poly]:
    """f(z, u + i v(z, z̄, u)) como séries nas variáveis do jato"""
    backend = s.backend
    order = min(f.order, s.order)
    v = s.poly.with_order(order)
    w = Poly.variable('u', order, backend) + v.scale(backend.i)
    bindings = {
        'z1': Poly.variable('z1', order, backend),
        'z2': Poly.variable('z2', order, backend),
        'w': w,
    }
    return [c.with_order(order).to_backend(backend).substitute(bindings) for c in f.components]


def apply(f: HoloMapJet, s: JetSeries) -> JetSeries:
    """Resolve Im W = v'(Z, Z̄, Re W) grau a grau

    A perda de coordenadas normais fica visível em `normal_coordinates` do resultado.
    """
    backend = s.backend
    order = min(f.order, s.order)
    big_z1, big_z2, big_w = _restricted_components(f, s)
    psi = [big_z1, big_z2, big_z1.conjugate(), big_z2.conjugate(), big_w.real_part()]
    target = big_w.imag_part()
    units = [tuple(1 if j == i else 0 for j in range(5)) for i in range(5)]
    linear = [[component.raw_coefficient(unit) for unit in units] for component in psi]
    try:
        inverse = invert_matrix(linear, backend)
    except AlgebraError:
        raise GraphDegenerate("Mudança (z, z̄, u) -> (Z, Z̄, U) singular na origem")
    new_vars = [Poly.variable(name, order, backend) for name in JET_VARIABLES]
    back = {name: sum((new_vars[j].scale(inverse[i][j]) for j in range(5)), Poly.zero(order, backend))
            for i, name in enumerate(JET_VARIABLES)}
    table = MonomialTable(psi, order)
    accumulated = Poly.zero(order, backend)
    result = Poly.zero(order, backend)
    for degree in range(1, order + 1):
        residual = (target - accumulated).homogeneous_part(degree)
        if residual.is_zero():
            continue
        piece = residual.substitute(back).homogeneous_part(degree)
        result = result + piece
        composed: Dict[int, Any] = {}
        zero = backend.zero
        for exps, c in piece.items():
            product = table.get(exps)
            for k, value in product.terms.items():
                composed[k] = composed.get(k, zero) + c.value * value
        accumulated = accumulated + Poly(composed, order, backend)
    return JetSeries.trusted(result)


def apply_linear(matrix: Sequence[Sequence[Any]], c_w: Any, s: JetSeries) -> JetSeries:
    """Ação exata de Z = B z, W = c w: v'(Z, Z̄, U) = c·v(B⁻¹Z, conj, U/c)"""
    backend = s.backend
    order = s.order
    raw = [[coerce_raw(x, backend) for x in row] for row in matrix]
    c = coerce_raw(c_w, backend)
    inverse = invert_matrix(raw, backend)
    z = [Poly.variable(name, order, backend) for name in ('z1', 'z2')]
    zb = [Poly.variable(name, order, backend) for name in ('zb1', 'zb2')]
    conj = backend.conj
    bindings = {
        'z1': z[0].scale(inverse[0][0]) + z[1].scale(inverse[0][1]),
        'z2': z[0].scale(inverse[1][0]) + z[1].scale(inverse[1][1]),
        'zb1': zb[0].scale(conj(inverse[0][0])) + zb[1].scale(conj(inverse[0][1])),
        'zb2': zb[0].scale(conj(inverse[1][0])) + zb[1].scale(conj(inverse[1][1])),
        'u': Poly.variable('u', order, backend).scale(backend.div(backend.one, c)),
    }
    if s.poly.is_zero():
        return s
    return JetSeries.trusted(s.poly.substitute(bindings).scale(c))


def transform_cubic(cubic: Poly, matrix: Sequence[Sequence[Any]], c_w: Any = 1) -> Poly:
    """Parte cúbica no novo sistema Z = B z, W = c w"""
    return apply_linear(matrix, c_w, JetSeries.trusted(cubic)).poly
