import threading
from typing import Any, Dict, Iterable, List, NamedTuple, Sequence, Tuple

from exact_algebra import get_backend

LIFT_VARIABLES = ('z1', 'z2', 'zb1', 'zb2', 'u', 'v')
COMPONENTS = ('xi1', 'xi2', 'xibar1', 'xibar2', 'eta', 'phi')
CONJUGATE_COMPONENT = {'xi1': 'xibar1', 'xi2': 'xibar2', 'xibar1': 'xi1', 'xibar2': 'xi2',
                       'eta': 'eta', 'phi': 'phi'}
_AXIS = {name: i for i, name in enumerate(LIFT_VARIABLES)}

# (jet monomial, derivada do campo): jet monomial = tupla ordenada de multi-índices K de v_K
TermKey = Tuple[Tuple[Tuple[int, ...], ...], 'VFDerivative']


class VFDerivative(NamedTuple):
    """Derivada de uma componente do campo, índice sobre (z1, z2, zb1, zb2, u, v)"""
    component: str
    index: Tuple[int, ...]

    @property
    def order(self) -> int:
        return sum(self.index)

    def conjugate(self) -> 'VFDerivative':
        i = self.index
        return VFDerivative(CONJUGATE_COMPONENT[self.component], (i[2], i[3], i[0], i[1], i[4], i[5]))

    def render(self) -> str:
        suffix = render_index(self.index, LIFT_VARIABLES)
        return f"{self.component}_{suffix}" if suffix else self.component


def render_index(index: Sequence[int], names: Sequence[str]) -> str:
    parts = []
    for name, e in zip(names, index):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return ''.join(parts)


def _unit(axis: int, size: int = 6) -> Tuple[int, ...]:
    return tuple(1 if i == axis else 0 for i in range(size))


def _shift(index: Sequence[int], axis: int) -> Tuple[int, ...]:
    out = list(index)
    out[axis] += 1
    return tuple(out)


# ---------------------------------------------------------------------------
# Equações determinantes infinitesimais
# ---------------------------------------------------------------------------

def canonicalize_derivative(component: str, index: Sequence[int], backend=None) -> List[Tuple[Any, VFDerivative]]:
    """Reescreve uma derivada na base (lista vazia quando se anula)"""
    backend = backend or get_backend('exact')
    i_unit = backend.i
    a1, a2, b1, b2, k, m = index
    holo = a1 + a2
    anti = b1 + b2

    def power_of_i(n: int, sign: int = 1):
        value = backend.one
        for _ in range(n):
            value = value * i_unit * sign
        return value

    if component in ('xi1', 'xi2'):
        if anti:
            return []
        return [(power_of_i(m), VFDerivative(component, (a1, a2, 0, 0, k + m, 0)))]
    if component in ('xibar1', 'xibar2'):
        if holo:
            return []
        return [(power_of_i(m, -1), VFDerivative(component, (0, 0, b1, b2, k + m, 0)))]
    if component == 'eta':
        if holo and anti:
            return []
        if holo:
            return [(power_of_i(m), VFDerivative('eta', (a1, a2, 0, 0, k + m, 0)))]
        if anti:
            return [(power_of_i(m, -1), VFDerivative('eta', (0, 0, b1, b2, k + m, 0)))]
        n = k + m
        sign = backend.one if m % 4 in (0, 1) else -backend.one
        if m % 2 == 0:
            return [(sign, VFDerivative('eta', (0, 0, 0, 0, n, 0)))]
        return [(sign, VFDerivative('eta', (0, 0, 0, 0, n - 1, 1)))]
    if component == 'phi':
        if holo and anti:
            return []
        if holo or anti:
            factor = -i_unit if holo else i_unit
            return [(factor * c, d) for c, d in canonicalize_derivative('eta', index, backend)]
        if k == 0 and m == 0:
            return [(backend.one, VFDerivative('phi', (0,) * 6))]
        if k >= 1:
            return [(-c, d) for c, d in canonicalize_derivative('eta', (0, 0, 0, 0, k - 1, m + 1), backend)]
        return canonicalize_derivative('eta', (0, 0, 0, 0, 1, m - 1), backend)
    raise ValueError(f"Componente desconhecida: {component}")


def is_basis(d: VFDerivative) -> bool:
    result = canonicalize_derivative(d.component, d.index)
    return len(result) == 1 and result[0][1] == d and result[0][0] == get_backend('exact').one


# ---------------------------------------------------------------------------
# Coeficientes prolongados
# ---------------------------------------------------------------------------

def _merge_monomial(monomial: Tuple[Tuple[int, ...], ...], K: Tuple[int, ...]):
    return tuple(sorted(monomial + (K,)))


class ProlongedCoefficient:
    """Soma formal de termos escalar × produto de v_K × derivada do campo"""

    __slots__ = ('J', 'terms', 'backend')

    def __init__(self, J: Tuple[int, ...], terms: Dict[TermKey, Any], backend=None):
        self.J = tuple(J)
        self.backend = backend or get_backend('exact')
        is_zero = self.backend.is_zero
        self.terms = {k: v for k, v in terms.items() if not is_zero(v)}

    @classmethod
    def component(cls, component: str, backend=None) -> 'ProlongedCoefficient':
        backend = backend or get_backend('exact')
        return cls((0,) * 5, {((), VFDerivative(component, (0,) * 6)): backend.one}, backend)

    def __add__(self, other: 'ProlongedCoefficient') -> 'ProlongedCoefficient':
        out = dict(self.terms)
        zero = self.backend.zero
        for k, v in other.terms.items():
            out[k] = out.get(k, zero) + v
        return ProlongedCoefficient(self.J, out, self.backend)

    def __sub__(self, other: 'ProlongedCoefficient') -> 'ProlongedCoefficient':
        return self + other.scale(-self.backend.one)

    def scale(self, c) -> 'ProlongedCoefficient':
        return ProlongedCoefficient(self.J, {k: v * c for k, v in self.terms.items()}, self.backend)

    def times_jet(self, K: Tuple[int, ...]) -> 'ProlongedCoefficient':
        """Multiplica por v_K"""
        out: Dict[TermKey, Any] = {}
        zero = self.backend.zero
        for (monomial, d), v in self.terms.items():
            key = (_merge_monomial(monomial, K), d)
            out[key] = out.get(key, zero) + v
        return ProlongedCoefficient(self.J, out, self.backend)

    def with_J(self, J: Tuple[int, ...]) -> 'ProlongedCoefficient':
        return ProlongedCoefficient(J, self.terms, self.backend)

    def __eq__(self, other):
        if not isinstance(other, ProlongedCoefficient):
            return NotImplemented
        return self.terms == other.terms

    def __len__(self):
        return len(self.terms)

    def coefficient(self, monomial: Iterable[Tuple[int, ...]], d: VFDerivative):
        key = (tuple(sorted(tuple(K) for K in monomial)), d)
        return self.terms.get(key, self.backend.zero)

    def conjugate(self) -> 'ProlongedCoefficient':
        conj = self.backend.conj
        out = {}
        for (monomial, d), v in self.terms.items():
            bar = tuple(sorted((K[2], K[3], K[0], K[1], K[4]) for K in monomial))
            out[(bar, d.conjugate())] = conj(v)
        J = self.J
        return ProlongedCoefficient((J[2], J[3], J[0], J[1], J[4]), out, self.backend)

    def render(self) -> str:
        return render(self)

    def __repr__(self):
        return f"ProlongedCoefficient({self.render()})"


def total_derivative(expr: ProlongedCoefficient, variable: str) -> ProlongedCoefficient:
    """D_a: v_K ganha o índice a; derivadas do campo pela regra da cadeia com v = v(z, z̄, u)"""
    backend = expr.backend
    axis = _AXIS[variable]
    if variable == 'v':
        raise ValueError("D_v não é uma derivada total do jato")
    e_a = _unit(axis, 5)
    out: Dict[TermKey, Any] = {}
    zero = backend.zero

    def add(key, value):
        out[key] = out.get(key, zero) + value

    for (monomial, d), c in expr.terms.items():
        for position, K in enumerate(monomial):
            grown = tuple(x + y for x, y in zip(K, e_a))
            rest = monomial[:position] + monomial[position + 1:]
            add((_merge_monomial(rest, grown), d), c)
        for factor, base in canonicalize_derivative(d.component, _shift(d.index, axis), backend):
            add((monomial, base), c * factor)
        for factor, base in canonicalize_derivative(d.component, _shift(d.index, 5), backend):
            add((_merge_monomial(monomial, e_a), base), c * factor)
    J = expr.J
    return ProlongedCoefficient(tuple(x + y for x, y in zip(J, e_a)), out, backend)


def _prolong_step(previous: ProlongedCoefficient, variable: str) -> ProlongedCoefficient:
    """φ^{J,a} = D_a φ^J − (D_a ξ^j) v_{J z_j} − (D_a ξ̄^j) v_{J z̄_j} − (D_a η) v_{J u}"""
    backend = previous.backend
    J = previous.J
    result = total_derivative(previous, variable)
    for component, axis in (('xi1', 0), ('xi2', 1), ('xibar1', 2), ('xibar2', 3), ('eta', 4)):
        derivative = total_derivative(ProlongedCoefficient.component(component, backend), variable)
        K = tuple(x + (1 if i == axis else 0) for i, x in enumerate(J))
        result = result - derivative.times_jet(K)
    return result.with_J(tuple(x + (1 if i == _AXIS[variable] else 0) for i, x in enumerate(J)))


class Prolongator:
    """Cache concorrente de φ^J (inserções idempotentes)"""

    def __init__(self, backend=None):
        self.backend = backend or get_backend('exact')
        self._memo: Dict[Tuple[int, ...], ProlongedCoefficient] = {}
        self._lock = threading.Lock()

    def phi(self, J: Sequence[int]) -> ProlongedCoefficient:
        J = tuple(J)
        with self._lock:
            cached = self._memo.get(J)
        if cached is not None:
            return cached
        if not any(J):
            result = ProlongedCoefficient.component('phi', self.backend)
        else:
            axis = max(i for i, e in enumerate(J) if e)
            previous = tuple(e - 1 if i == axis else e for i, e in enumerate(J))
            result = _prolong_step(self.phi(previous), LIFT_VARIABLES[axis])
        with self._lock:
            self._memo.setdefault(J, result)
            return self._memo[J]

    def along(self, variables: Sequence[str]) -> ProlongedCoefficient:
        """φ^J calculado ao longo de um caminho explícito de diferenciação"""
        result = ProlongedCoefficient.component('phi', self.backend)
        for name in variables:
            result = _prolong_step(result, name)
        return result


_PROLONGATORS: Dict[Tuple, Prolongator] = {}
_REGISTRY_LOCK = threading.Lock()


def get_prolongator(backend=None) -> Prolongator:
    backend = backend or get_backend('exact')
    with _REGISTRY_LOCK:
        if backend.key not in _PROLONGATORS:
            _PROLONGATORS[backend.key] = Prolongator(backend)
        return _PROLONGATORS[backend.key]


def phi_prolonged(J: Sequence[int], backend=None) -> ProlongedCoefficient:
    return get_prolongator(backend).phi(J)


def prolong_along(variables: Sequence[str], backend=None) -> ProlongedCoefficient:
    return get_prolongator(backend).along(variables)


def render_jet(K: Sequence[int]) -> str:
    return 'v_' + render_index(K, LIFT_VARIABLES[:5])


def render(expr: ProlongedCoefficient) -> str:
    """Texto de depuração na notação xi1_z1, v_z1zb1, ..."""
    if not expr.terms:
        return '0'
    backend = expr.backend
    pieces = []
    for (monomial, d), c in sorted(expr.terms.items(), key=lambda item: (item[0][1], item[0][0])):
        factors = [render_jet(K) for K in monomial] + [d.render()]
        text = backend.render(c)
        if c == backend.one:
            term = '*'.join(factors)
        elif c == -backend.one:
            term = '-' + '*'.join(factors)
        elif backend.is_real(c):
            term = f"{text}*" + '*'.join(factors)
        else:
            term = f"({text})*" + '*'.join(factors)
        if pieces and term.startswith('-'):
            pieces.append(' - ' + term[1:])
        elif pieces:
            pieces.append(' + ' + term)
        else:
            pieces.append(term)
    return ''.join(pieces)
