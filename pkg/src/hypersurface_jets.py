from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel

from errors import AlgebraError, NeedsRadical, NotNormalCoordinates, NotRankZero, NotReal
from exact_algebra import (JET_VARIABLES, Poly, Scalar, coerce_raw, factorial_of, get_backend,
                           rank_of, render_monomial)
from expression_parser import parse_poly

JET_WEIGHTS = (1, 1, 1, 1, 3)
HOLOMORPHIC_INDICES = (0, 1)
ANTIHOLOMORPHIC_INDICES = (2, 3)


def index_key(exps: Sequence[int]) -> str:
    """Chave "j1.j2.k1.k2.l" de um multi-índice"""
    return '.'.join(str(e) for e in exps)


def parse_index_key(text: str) -> Tuple[int, ...]:
    parts = [int(p) for p in text.split('.')]
    if len(parts) != 5 or any(p < 0 for p in parts):
        raise AlgebraError(f"Multi-índice inválido: {text!r}")
    return tuple(parts)


def weight_of(exps: Sequence[int]) -> int:
    return sum(e * w for e, w in zip(exps, JET_WEIGHTS))


def is_pure(exps: Sequence[int]) -> bool:
    """Monômio sem z̄ ou sem z (termo puro)"""
    return (exps[2] == 0 and exps[3] == 0) or (exps[0] == 0 and exps[1] == 0)


class JetSeries:
    """Jato truncado da função definidora real v(z, z̄, u)"""

    def __init__(self, poly: Poly, strict: bool = True):
        if poly.variables != JET_VARIABLES:
            raise AlgebraError("JetSeries exige as variáveis (z1, z2, zb1, zb2, u)")
        self.poly = poly
        self.order = poly.order
        self.backend = poly.backend
        if poly.conjugate() != poly:
            raise NotReal("A função definidora não é real (conj(v) ≠ v)")
        if strict and not check_normal_coordinates(self):
            raise NotNormalCoordinates("A função definidora não está em coordenadas normais")

    @classmethod
    def trusted(cls, poly: Poly) -> 'JetSeries':
        """Construção sem verificação (resultados internos já reais)"""
        series = cls.__new__(cls)
        series.poly = poly
        series.order = poly.order
        series.backend = poly.backend
        return series

    @classmethod
    def zero(cls, order: int, backend=None) -> 'JetSeries':
        return cls.trusted(Poly.zero(order, backend))

    # acesso -----------------------------------------------------------------
    def coefficient(self, exps: Sequence[int]) -> Scalar:
        return self.poly.coefficient(exps)

    def jet_coefficient(self, exps: Sequence[int]) -> Scalar:
        return jet_coefficient(self, exps)

    def items(self) -> List[Tuple[Tuple[int, ...], Scalar]]:
        return self.poly.items()

    @property
    def normal_coordinates(self) -> bool:
        """Falso quando há termos puros (ex.: imagem por aplicação com z1·w em W)"""
        return check_normal_coordinates(self)

    def weighted_part(self, weight: int) -> Poly:
        return self.poly.weighted_part(JET_WEIGHTS, weight)

    def cubic(self) -> Poly:
        """Parte de peso 3 (z, z̄ com peso 1 e u com peso 3)"""
        return self.weighted_part(3)

    def with_order(self, order: int) -> 'JetSeries':
        return JetSeries.trusted(self.poly.with_order(order))

    def to_backend(self, backend) -> 'JetSeries':
        return JetSeries.trusted(self.poly.to_backend(backend))

    def __eq__(self, other):
        if not isinstance(other, JetSeries):
            return NotImplemented
        return self.poly == other.poly

    def __hash__(self):
        return hash(self.poly)

    def render(self) -> str:
        return self.poly.render()

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"JetSeries({self.render()}, order={self.order})"

    def to_frame(self) -> pd.DataFrame:
        """Tabela de coeficientes (índice, monômio, peso, coeficiente, V_J)"""
        rows = []
        for exps, c in self.items():
            rows.append({
                'indice': index_key(exps),
                'monomio': render_monomial(exps),
                'peso': weight_of(exps),
                'coeficiente': c.render(),
                'V_J': (c * factorial_of(exps)).render(),
            })
        return pd.DataFrame(rows, columns=['indice', 'monomio', 'peso', 'coeficiente', 'V_J'])


# ---------------------------------------------------------------------------
# Construção
# ---------------------------------------------------------------------------

def parse_series(text: str, order: int = 6, backend=None, strict: bool = True) -> JetSeries:
    return JetSeries(parse_poly(text, order, backend), strict=strict)


def from_jets(jets: Dict[Tuple[int, ...], Any], order: int, backend=None, strict: bool = False) -> JetSeries:
    """Série a partir dos v_J (divide por J!)"""
    backend = backend or get_backend('exact')
    data = {}
    for exps, value in jets.items():
        if sum(exps) > order:
            raise AlgebraError(f"|J| = {sum(exps)} excede a ordem {order}")
        raw = coerce_raw(value, backend)
        data[tuple(exps)] = backend.div(raw, backend.from_int(factorial_of(exps)))
    return JetSeries(Poly.from_dict(data, order, backend), strict=strict)


def jet_coefficient(s: JetSeries, exps: Sequence[int]) -> Scalar:
    """v_J = J! vezes o coeficiente de x^J"""
    if sum(exps) > s.order:
        raise AlgebraError(f"|J| = {sum(exps)} excede a ordem {s.order}")
    return s.coefficient(exps) * factorial_of(exps)


# ---------------------------------------------------------------------------
# Diagnósticos
# ---------------------------------------------------------------------------

class LeviData(BaseModel):
    matrix: List[List[Any]]
    a1: Any
    a2: Any
    rank_at_origin: int
    vanishes_identically: bool

    class Config:
        arbitrary_types_allowed = True

    def constant_matrix(self) -> List[List[Scalar]]:
        return [[entry.constant_term() for entry in row] for row in self.matrix]


class NondegeneracyReport(BaseModel):
    delta12: Any
    delta23: Any
    delta13: Any
    two_nondegenerate: bool
    span_dimension: int

    class Config:
        arbitrary_types_allowed = True


class AdmissibilityReport(BaseModel):
    normal_coordinates: bool
    real: bool
    rank_zero: bool
    levi_not_flat: bool
    two_nondegenerate: bool
    excluded_r_half: Optional[bool] = None
    pure_weight: Optional[int] = None
    notes: List[str] = []

    @property
    def ok(self) -> bool:
        return (self.normal_coordinates and self.real and self.rank_zero and self.levi_not_flat
                and self.two_nondegenerate and not self.excluded_r_half)

    def to_frame(self) -> pd.DataFrame:
        checks = [
            ('coordenadas normais', self.normal_coordinates),
            ('realidade', self.real),
            ('posto zero na origem', self.rank_zero),
            ('Levi não identicamente nula', self.levi_not_flat),
            ('2-não degenerada', self.two_nondegenerate),
            ('fora do caso |r| = 1/2', None if self.excluded_r_half is None else not self.excluded_r_half),
        ]
        return pd.DataFrame(checks, columns=['verificacao', 'ok'])


def check_normal_coordinates(s: JetSeries, max_weight: Optional[int] = None) -> bool:
    """Restrições z̄ = 0 e z = 0 se anulam (opcionalmente só até um peso)"""
    lowest = lowest_pure_weight(s)
    return lowest is None or (max_weight is not None and lowest > max_weight)


def lowest_pure_weight(s: JetSeries) -> Optional[int]:
    """Menor peso de um termo puro (None em coordenadas normais)"""
    weights = [weight_of(exps) for exps, _ in s.items() if is_pure(exps)]
    return min(weights) if weights else None


def levi(s: JetSeries) -> LeviData:
    """Matriz de Levi hermitiana via A_k = -v_{z_k}/(i + v_u)"""
    backend = s.backend
    order = s.order
    v = s.poly
    denominator = (Poly.constant(backend.i, order - 1, backend) + v.derivative('u').with_order(order - 1))
    inverse = denominator.inverse()
    a = [-(v.derivative(name).with_order(order - 1) * inverse) for name in ('z1', 'z2')]
    a_bar = [ak.conjugate() for ak in a]
    entry_order = max(order - 2, 0)
    half_i = backend.from_rational(0, 1, 1, 2)
    holo, anti = ('z1', 'z2'), ('zb1', 'zb2')
    matrix = []
    for j in range(2):
        row = []
        for k in range(2):
            term = (a_bar[k].derivative(holo[j]) + a[j] * a_bar[k].derivative('u')
                    - a[j].derivative(anti[k]) - a_bar[k] * a[j].derivative('u'))
            row.append(term.with_order(entry_order).scale(half_i))
        matrix.append(row)
    constants = [[entry.raw_coefficient((0, 0, 0, 0, 0)) for entry in row] for row in matrix]
    rank = rank_of(constants, 2, backend)
    flat = all(entry.is_zero() for row in matrix for entry in row)
    return LeviData(matrix=matrix, a1=a[0], a2=a[1], rank_at_origin=rank, vanishes_identically=flat)


def third_order_jets(s: JetSeries) -> Dict[str, Scalar]:
    """Os seis jatos v_{z_i z_j z̄_k}(p)"""
    names = {
        'z1z1zb1': (2, 0, 1, 0, 0), 'z1z1zb2': (2, 0, 0, 1, 0),
        'z1z2zb1': (1, 1, 1, 0, 0), 'z1z2zb2': (1, 1, 0, 1, 0),
        'z2z2zb1': (0, 2, 1, 0, 0), 'z2z2zb2': (0, 2, 0, 1, 0),
    }
    return {name: jet_coefficient(s, exps) for name, exps in names.items()}


def nondegeneracy(s: JetSeries) -> NondegeneracyReport:
    if levi(s).rank_at_origin != 0:
        raise NotRankZero("Matriz de Levi não se anula na origem")
    j = third_order_jets(s)
    delta12 = j['z1z2zb1'] * j['z1z1zb2'] - j['z1z2zb2'] * j['z1z1zb1']
    delta23 = j['z1z2zb2'] * j['z2z2zb1'] - j['z1z2zb1'] * j['z2z2zb2']
    delta13 = j['z1z1zb1'] * j['z2z2zb2'] - j['z1z1zb2'] * j['z2z2zb1']
    rows = [[j['z1z1zb1'].value, j['z1z1zb2'].value],
            [j['z1z2zb1'].value, j['z1z2zb2'].value],
            [j['z2z2zb1'].value, j['z2z2zb2'].value]]
    span = rank_of(rows, 2, s.backend)
    nondegenerate = not (delta12.is_zero() and delta23.is_zero() and delta13.is_zero())
    return NondegeneracyReport(delta12=delta12, delta23=delta23, delta13=delta13,
                               two_nondegenerate=nondegenerate, span_dimension=span)


def is_admissible(s: JetSeries) -> AdmissibilityReport:
    """Relatório de admissibilidade; cada verificação é independente"""
    notes: List[str] = []
    pure_weight = lowest_pure_weight(s)
    normal = pure_weight is None
    if not normal:
        notes.append(f"termo puro de peso {pure_weight}")
    real = s.poly.conjugate() == s.poly
    data = levi(s)
    rank_zero = data.rank_at_origin == 0
    nondegenerate = False
    if rank_zero:
        nondegenerate = nondegeneracy(s).two_nondegenerate
    excluded: Optional[bool] = None
    if (pure_weight is None or pure_weight > 3) and real and rank_zero and nondegenerate:
        from branch_normalizer import classify_cubic
        try:
            excluded = classify_cubic(s.cubic()).excluded
        except NeedsRadical as e:
            notes.append(str(e))
    return AdmissibilityReport(normal_coordinates=normal, real=real, rank_zero=rank_zero,
                               levi_not_flat=not data.vanishes_identically,
                               two_nondegenerate=nondegenerate, excluded_r_half=excluded,
                               pure_weight=pure_weight, notes=notes)
