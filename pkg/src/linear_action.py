import threading
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

from exact_algebra import (HOLO_VARIABLES, Poly, conjugate_exponents, get_backend,
                           monomial_sort_key, solve_raw)
from hypersurface_jets import JetSeries
from transform_engine import HoloMapJet, identity

Jet = Tuple[int, ...]


class Unknown(NamedTuple):
    """Coeficiente real de um campo: componente f1, f2 ou g, monômio em (z1, z2, w), parte re/im"""
    component: str
    exps: Tuple[int, int, int]
    part: str

    @property
    def weight(self) -> int:
        return self.exps[0] + self.exps[1] + 3 * self.exps[2]

    def render(self) -> str:
        names = ''.join(f"{n}^{e}" if e > 1 else n for n, e in zip(HOLO_VARIABLES, self.exps) if e)
        return f"{self.part}({self.component}[{names or '1'}])"


def holomorphic_monomials(weight: int, max_degree: int) -> List[Tuple[int, int, int]]:
    """Monômios z1^a1 z2^a2 w^b de peso a1 + a2 + 3b e grau ≤ max_degree"""
    out = []
    for b in range(weight // 3 + 1):
        rest = weight - 3 * b
        for a1 in range(rest, -1, -1):
            exps = (a1, rest - a1, b)
            if sum(exps) <= max_degree:
                out.append(exps)
    return out


def representatives(weight: int, max_degree: int) -> List[Jet]:
    """Multi-índices J de peso dado com J ≥ J̄ (um de cada par conjugado)"""
    out = []
    for l in range(weight // 3 + 1):
        rest = weight - 3 * l
        for a1 in range(rest + 1):
            for a2 in range(rest + 1 - a1):
                for b1 in range(rest + 1 - a1 - a2):
                    b2 = rest - a1 - a2 - b1
                    J = (a1, a2, b1, b2, l)
                    if sum(J) <= max_degree and J >= conjugate_exponents(J):
                        out.append(J)
    return sorted(out, key=monomial_sort_key)


def row_parts(J: Jet) -> Tuple[str, ...]:
    return ('re',) if J == conjugate_exponents(J) else ('re', 'im')


def field_unknowns(f_weights: Iterable[int], g_weights: Iterable[int], order: int) -> List[Unknown]:
    unknowns = []
    for w in f_weights:
        for exps in holomorphic_monomials(w, order - 2):
            for component in ('f1', 'f2'):
                unknowns.extend(Unknown(component, exps, part) for part in ('re', 'im'))
    for w in g_weights:
        for exps in holomorphic_monomials(w, order):
            unknowns.extend(Unknown('g', exps, part) for part in ('re', 'im'))
    return unknowns


class LinearAction:
    """Ação linearizada de campos holomorfos sobre os coeficientes de v

    δv = Im g(z, u + iv) − 2 Re(f·v_z) − Re g(z, u + iv)·v_u
    """

    def __init__(self, series: JetSeries, unknowns: Sequence[Unknown]):
        self.series = series
        self.backend = series.backend
        self.order = series.order
        self.unknowns = list(unknowns)
        backend = self.backend
        v = series.poly
        self._v_u = v.derivative('u')
        self._v_z = {'f1': v.derivative('z1'), 'f2': v.derivative('z2')}
        self._w = Poly.variable('u', self.order, backend) + v.scale(backend.i)
        self._powers = [Poly.constant(1, self.order, backend)]
        self._effects: List[Poly] = [self._effect(x) for x in self.unknowns]

    def _power(self, b: int) -> Poly:
        while len(self._powers) <= b:
            self._powers.append(self._powers[-1] * self._w)
        return self._powers[b]

    def _effect(self, unknown: Unknown) -> Poly:
        backend = self.backend
        a1, a2, b = unknown.exps
        m = Poly.monomial((a1, a2, 0, 0, 0), 1, self.order, backend) * self._power(b)
        if unknown.part == 'im':
            m = m.scale(backend.i)
        if unknown.component == 'g':
            return m.imag_part() - m.real_part() * self._v_u
        p = m * self._v_z[unknown.component]
        return -(p + p.conjugate())

    def effect(self, unknown: Unknown) -> Poly:
        return self._effects[self.unknowns.index(unknown)]

    def row(self, J: Jet, part: str) -> List[Any]:
        """Linha real: parte `part` do coeficiente de z^a z̄^b u^l em cada efeito"""
        backend = self.backend
        pick = backend.real if part == 're' else backend.imag
        return [pick(effect.raw_coefficient(J)) for effect in self._effects]

    def rows(self, keys: Sequence[Tuple[Jet, str]]) -> List[List[Any]]:
        return [self.row(J, part) for J, part in keys]

    def rank(self, keys: Sequence[Tuple[Jet, str]]) -> int:
        echelon = RowEchelon(self.backend)
        for key in keys:
            echelon.add(self.row(*key))
        return echelon.rank

    def solve(self, keys: Sequence[Tuple[Jet, str]], targets: Sequence[Any]) -> List[Any]:
        """Solução particular (variáveis livres nulas) de rows(keys)·x = targets"""
        if not keys:
            return [self.backend.zero] * len(self.unknowns)
        solution, _, _ = solve_raw(self.rows(keys), list(targets), len(self.unknowns), self.backend)
        return solution

    def nullspace(self, keys: Sequence[Tuple[Jet, str]]) -> List[List[Any]]:
        zero = self.backend.zero
        rows = self.rows(keys)
        if not rows:
            rows = [[zero] * len(self.unknowns)]
        _, basis, _ = solve_raw(rows, [zero] * len(rows), len(self.unknowns), self.backend)
        return basis

    def field(self, vector: Sequence[Any]) -> Tuple[Poly, Poly, Poly]:
        """(f1, f2, g) como polinômios em (z1, z2, w)"""
        backend = self.backend
        data: Dict[str, Dict[Tuple[int, int, int], Any]] = {'f1': {}, 'f2': {}, 'g': {}}
        for x, c in zip(self.unknowns, vector):
            if backend.is_zero(c):
                continue
            value = c if x.part == 're' else c * backend.i
            bucket = data[x.component]
            bucket[x.exps] = bucket.get(x.exps, backend.zero) + value
        return tuple(Poly.from_dict(data[name], self.order, backend, HOLO_VARIABLES)
                     for name in ('f1', 'f2', 'g'))

    def map_from(self, vector: Sequence[Any]) -> HoloMapJet:
        """Z = z + f, W = w + g"""
        base = identity(self.order, self.backend)
        f1, f2, g = self.field(vector)
        return HoloMapJet(base.z1 + f1, base.z2 + f2, base.w + g)


class RowEchelon:
    """Forma escalonada incremental para testar independência de linhas"""

    def __init__(self, backend=None):
        self.backend = backend or get_backend('exact')
        self._rows: List[Tuple[int, List[Any]]] = []

    @property
    def rank(self) -> int:
        return len(self._rows)

    def reduce(self, row: Sequence[Any]) -> List[Any]:
        backend = self.backend
        out = list(row)
        for pivot, base in self._rows:
            c = out[pivot]
            if not backend.is_zero(c):
                out = [x - c * y for x, y in zip(out, base)]
        return out

    def add(self, row: Sequence[Any]) -> bool:
        """Acrescenta a linha se for independente; devolve True nesse caso"""
        backend = self.backend
        reduced = self.reduce(row)
        pivot = next((i for i, x in enumerate(reduced) if not backend.is_zero(x)), None)
        if pivot is None:
            return False
        inverse = backend.div(backend.one, reduced[pivot])
        reduced = [x * inverse for x in reduced]
        for k, (p, base) in enumerate(self._rows):
            c = base[pivot]
            if not backend.is_zero(c):
                self._rows[k] = (p, [x - c * y for x, y in zip(base, reduced)])
        self._rows.append((pivot, reduced))
        return True

    def contains(self, row: Sequence[Any]) -> bool:
        return all(self.backend.is_zero(x) for x in self.reduce(row))


# ---------------------------------------------------------------------------
# Ação graduada por peso
# ---------------------------------------------------------------------------

_CACHE: Dict[Tuple, LinearAction] = {}
_CACHE_LOCK = threading.Lock()


def weight_action(cubic: Poly, weight: int, order: int) -> LinearAction:
    """Ação dos campos de peso (weight − 2, weight) sobre a parte de peso `weight`, linearizada na cúbica"""
    key = (cubic.backend.key, hash(cubic), weight, order)
    with _CACHE_LOCK:
        cached = _CACHE.get(key)
    if cached is not None and cached.series.poly == cubic.with_order(order):
        return cached
    series = JetSeries.trusted(cubic.with_order(order))
    f_weights = [weight - 2] if weight >= 3 else []
    action = LinearAction(series, field_unknowns(f_weights, [weight], order))
    with _CACHE_LOCK:
        _CACHE[key] = action
    return action


def weight_keys(weight: int, order: int) -> List[Tuple[Jet, str]]:
    return [(J, part) for J in representatives(weight, order) for part in row_parts(J)]


def read_part(series: JetSeries, J: Jet, part: str):
    backend = series.backend
    c = series.poly.raw_coefficient(J)
    return backend.real(c) if part == 're' else backend.imag(c)


def solve_weight(action: LinearAction, keys: Sequence[Tuple[Jet, str]], targets: Sequence[Any]) -> Optional[HoloMapJet]:
    """Mapa de peso fixo que leva as partes `keys` aos `targets` (None se já satisfeitas)"""
    backend = action.backend
    if all(backend.is_zero(t) for t in targets):
        return None
    solution = action.solve(keys, targets)
    if all(backend.is_zero(x) for x in solution):
        return None
    return action.map_from(solution)
