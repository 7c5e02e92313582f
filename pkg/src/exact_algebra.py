import os
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
from dotenv import load_dotenv
from sympy import integer_nthroot
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from errors import AlgebraError, BackendMismatch, Infeasible, NeedsRadical, SubstitutionError

load_dotenv()

JET_VARIABLES = ('z1', 'z2', 'zb1', 'zb2', 'u')
HOLO_VARIABLES = ('z1', 'z2', 'w')
CONJUGATE_NAMES = {'z1': 'zb1', 'z2': 'zb2', 'zb1': 'z1', 'zb2': 'z2', 'u': 'u'}

MIN_PRECISION_BITS = 128
_FIELD_BITS = 6
_FIELD_MASK = (1 << _FIELD_BITS) - 1


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------

class ExactBackend:
    """Racionais gaussianos exatos (domínio QQ_I do sympy)"""

    name = 'exact'
    exact = True
    precision_bits = None

    def __init__(self):
        self.zero = QQ_I.zero
        self.one = QQ_I.one
        self.i = QQ_I(0, 1)
        self.key = ('exact',)

    def from_rational(self, num: int, den: int = 1, im_num: int = 0, im_den: int = 1):
        return QQ_I(QQ(num, den), QQ(im_num, im_den))

    def from_int(self, n: int):
        return QQ_I(n, 0)

    def from_parts(self, re, im=0):
        return QQ_I(QQ.convert(re), QQ.convert(im))

    def real_rational(self, x):
        return x.x

    def imag_rational(self, x):
        return x.y

    def conj(self, x):
        return QQ_I(x.x, -x.y)

    def real(self, x):
        return QQ_I(x.x, 0)

    def imag(self, x):
        return QQ_I(x.y, 0)

    def is_zero(self, x) -> bool:
        return x.x == 0 and x.y == 0

    def equal(self, a, b) -> bool:
        return a == b

    def is_real(self, x) -> bool:
        return x.y == 0

    def abs2(self, x):
        return QQ_I(x.x * x.x + x.y * x.y, 0)

    def div(self, a, b):
        n = b.x * b.x + b.y * b.y
        if n == 0:
            raise AlgebraError("Divisão por zero")
        return QQ_I((a.x * b.x + a.y * b.y) / n, (a.y * b.x - a.x * b.y) / n)

    def real_sign(self, x) -> int:
        if x.x > 0:
            return 1
        if x.x < 0:
            return -1
        return 0

    def sqrt(self, x):
        """Raiz quadrada principal em Q(i) ou NeedsRadical"""
        a, b = x.x, x.y
        if a == 0 and b == 0:
            return self.zero
        modulus = _rational_root(a * a + b * b, 2)
        if modulus is None:
            raise NeedsRadical(f"raiz quadrada irracional de {self.render(x)}")
        p = _rational_root((modulus + a) / 2, 2)
        q = _rational_root((modulus - a) / 2, 2)
        if p is None or q is None:
            raise NeedsRadical(f"raiz quadrada irracional de {self.render(x)}")
        if b < 0:
            q = -q
        return QQ_I(p, q)

    def cbrt_real(self, x):
        """Raiz cúbica real de um racional real ou NeedsRadical"""
        if x.y != 0:
            raise NeedsRadical("raiz cúbica de número não real")
        a = x.x
        if a == 0:
            return self.zero
        root = _rational_root(abs(a), 3)
        if root is None:
            raise NeedsRadical(f"raiz cúbica irracional de {self.render(x)}")
        return QQ_I(root if a > 0 else -root, 0)

    def nth_root_real(self, x, n: int):
        """Raiz n-ésima positiva de um racional positivo"""
        if x.y != 0 or x.x <= 0:
            raise AlgebraError("raiz real exige racional positivo")
        root = _rational_root(x.x, n)
        if root is None:
            raise NeedsRadical(f"raiz de ordem {n} irracional de {self.render(x)}")
        return QQ_I(root, 0)

    def cbrt(self, x):
        """Uma raiz cúbica em Q(i): real para reais, -i*cbrt(y) para i*y"""
        if x.y == 0:
            return self.cbrt_real(x)
        if x.x == 0:
            root = self.cbrt_real(QQ_I(x.y, 0))
            return QQ_I(0, -root.x)
        raise NeedsRadical(f"raiz cúbica complexa de {self.render(x)}")

    def less_than(self, a, b) -> bool:
        return a.x < b.x

    def to_float(self, x, backend: 'FloatBackend'):
        return backend.from_parts((int(x.x.numerator), int(x.x.denominator)),
                                  (int(x.y.numerator), int(x.y.denominator)))

    def convert(self, x, source):
        if source is self:
            return x
        raise BackendMismatch("conversão de ponto flutuante para exato não suportada")

    def render(self, x) -> str:
        return _render_complex(_render_rational(x.x), _render_rational(x.y), x.x == 0, x.y == 0, x.y < 0)


class FloatBackend:
    """Complexos de precisão arbitrária (mpmath)"""

    name = 'float'
    exact = False

    def __init__(self, precision_bits: int):
        if precision_bits < MIN_PRECISION_BITS:
            raise AlgebraError(f"Precisão mínima é {MIN_PRECISION_BITS} bits")
        self.precision_bits = precision_bits
        self.ctx = mpmath.MPContext()
        self.ctx.prec = precision_bits
        self.zero = self.ctx.mpc(0)
        self.one = self.ctx.mpc(1)
        self.i = self.ctx.mpc(0, 1)
        self.tolerance = self.ctx.mpf(2) ** (-(precision_bits - 48))
        self.key = ('float', precision_bits)

    def _mpf(self, value):
        if isinstance(value, tuple):
            return self.ctx.mpf(value[0]) / value[1]
        if hasattr(value, 'numerator') and hasattr(value, 'denominator'):
            return self.ctx.mpf(int(value.numerator)) / int(value.denominator)
        return self.ctx.mpf(value)

    def from_rational(self, num: int, den: int = 1, im_num: int = 0, im_den: int = 1):
        return self.ctx.mpc(self.ctx.mpf(num) / den, self.ctx.mpf(im_num) / im_den)

    def from_int(self, n: int):
        return self.ctx.mpc(n)

    def from_parts(self, re, im=0):
        return self.ctx.mpc(self._mpf(re), self._mpf(im))

    def real_rational(self, x):
        return x.real

    def imag_rational(self, x):
        return x.imag

    def conj(self, x):
        return x.conjugate()

    def real(self, x):
        return self.ctx.mpc(x.real)

    def imag(self, x):
        return self.ctx.mpc(x.imag)

    def is_zero(self, x) -> bool:
        return abs(x) <= self.tolerance

    def equal(self, a, b) -> bool:
        return abs(a - b) <= self.tolerance * max(1, abs(a), abs(b))

    def is_real(self, x) -> bool:
        return abs(x.imag) <= self.tolerance * max(1, abs(x))

    def abs2(self, x):
        return self.ctx.mpc(x.real * x.real + x.imag * x.imag)

    def div(self, a, b):
        if abs(b) == 0:
            raise AlgebraError("Divisão por zero")
        return a / b

    def real_sign(self, x) -> int:
        if abs(x.real) <= self.tolerance:
            return 0
        return 1 if x.real > 0 else -1

    def sqrt(self, x):
        return self.ctx.sqrt(x)

    def cbrt_real(self, x):
        a = x.real
        if a == 0:
            return self.zero
        root = self.ctx.cbrt(abs(a))
        return self.ctx.mpc(root if a > 0 else -root)

    def nth_root_real(self, x, n: int):
        if x.real <= 0:
            raise AlgebraError("raiz real exige número positivo")
        return self.ctx.mpc(self.ctx.root(x.real, n))

    def cbrt(self, x):
        return self.ctx.root(x, 3)

    def less_than(self, a, b) -> bool:
        return a.real < b.real

    def to_float(self, x, backend: 'FloatBackend'):
        return backend.ctx.mpc(x.real, x.imag)

    def convert(self, x, source):
        if source is self:
            return x
        return source.to_float(x, self)

    def render(self, x) -> str:
        digits = max(20, int(self.precision_bits * 0.30103) - 4)
        re = mpmath.nstr(x.real, digits, min_fixed=-6, max_fixed=6)
        im = mpmath.nstr(abs(x.imag), digits, min_fixed=-6, max_fixed=6)
        return _render_complex(re, im if x.imag >= 0 else '-' + im,
                               self.is_zero(self.ctx.mpc(x.real)), self.is_zero(self.ctx.mpc(x.imag)),
                               x.imag < 0)


def _rational_root(q, n: int):
    """Raiz n-ésima racional não negativa de q >= 0, ou None"""
    if q < 0:
        return None
    num, den = int(q.numerator), int(q.denominator)
    rn, exact_n = integer_nthroot(num, n)
    rd, exact_d = integer_nthroot(den, n)
    if not (exact_n and exact_d):
        return None
    return QQ(rn, rd)


def _render_rational(q) -> str:
    num, den = int(q.numerator), int(q.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


def _render_complex(re: str, im: str, re_zero: bool, im_zero: bool, im_negative: bool) -> str:
    if im_zero:
        return re
    if re_zero:
        return f"{im}*I"
    if im_negative:
        return f"{re}-{im.lstrip('-')}*I"
    return f"{re}+{im}*I"


_BACKENDS: Dict[Tuple, Any] = {}


def default_precision_bits() -> int:
    bits = int(os.getenv('CR_PRECISION_BITS', '256'))
    return max(bits, MIN_PRECISION_BITS)


def get_backend(name: str = 'exact', precision_bits: Optional[int] = None):
    """Devolve (e reaproveita) o backend aritmético pedido"""
    if name == 'exact':
        key = ('exact',)
        if key not in _BACKENDS:
            _BACKENDS[key] = ExactBackend()
        return _BACKENDS[key]
    if name == 'float':
        bits = precision_bits or default_precision_bits()
        key = ('float', bits)
        if key not in _BACKENDS:
            _BACKENDS[key] = FloatBackend(bits)
        return _BACKENDS[key]
    raise AlgebraError(f"Backend desconhecido: {name}")


def _check_backend(a, b):
    if a.key != b.key:
        raise BackendMismatch(f"Backends incompatíveis: {a.key} vs {b.key}")


# ---------------------------------------------------------------------------
# Scalar
# ---------------------------------------------------------------------------

class Scalar:
    """Escalar imutável (racional gaussiano ou complexo de precisão arbitrária)"""

    __slots__ = ('value', 'backend')

    def __init__(self, value, backend=None):
        self.backend = backend or get_backend('exact')
        self.value = value

    @classmethod
    def of(cls, x, backend=None) -> 'Scalar':
        backend = backend or get_backend('exact')
        if isinstance(x, Scalar):
            _check_backend(x.backend, backend)
            return x
        return cls(coerce_raw(x, backend), backend)

    @classmethod
    def rational(cls, num: int, den: int = 1, im_num: int = 0, im_den: int = 1, backend=None) -> 'Scalar':
        backend = backend or get_backend('exact')
        return cls(backend.from_rational(num, den, im_num, im_den), backend)

    @classmethod
    def parse(cls, text: str, backend=None) -> 'Scalar':
        """Inverso de render: `a/b+c/d*I`"""
        from expression_parser import parse_scalar

        return parse_scalar(text, backend)

    def _other(self, other):
        if isinstance(other, Scalar):
            _check_backend(self.backend, other.backend)
            return other.value
        return coerce_raw(other, self.backend)

    def __add__(self, other):
        return Scalar(self.value + self._other(other), self.backend)

    __radd__ = __add__

    def __sub__(self, other):
        return Scalar(self.value - self._other(other), self.backend)

    def __rsub__(self, other):
        return Scalar(self._other(other) - self.value, self.backend)

    def __mul__(self, other):
        if isinstance(other, Poly):
            return other * self
        return Scalar(self.value * self._other(other), self.backend)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return Scalar(self.backend.div(self.value, self._other(other)), self.backend)

    def __rtruediv__(self, other):
        return Scalar(self.backend.div(self._other(other), self.value), self.backend)

    def __neg__(self):
        return Scalar(-self.value, self.backend)

    def __pow__(self, k: int):
        result = self.backend.one
        base = self.value
        if k < 0:
            base = self.backend.div(self.backend.one, base)
            k = -k
        for _ in range(k):
            result = result * base
        return Scalar(result, self.backend)

    def __eq__(self, other):
        if not isinstance(other, (Scalar, int)) and not hasattr(other, 'x'):
            return NotImplemented
        return self.backend.equal(self.value, self._other(other))

    def __hash__(self):
        if self.backend.exact:
            return hash((self.value.x, self.value.y))
        return hash(self.backend.key)

    def __bool__(self):
        return not self.is_zero()

    def conjugate(self) -> 'Scalar':
        return Scalar(self.backend.conj(self.value), self.backend)

    def real(self) -> 'Scalar':
        return Scalar(self.backend.real(self.value), self.backend)

    def imag(self) -> 'Scalar':
        return Scalar(self.backend.imag(self.value), self.backend)

    def abs2(self) -> 'Scalar':
        return Scalar(self.backend.abs2(self.value), self.backend)

    def is_zero(self) -> bool:
        return self.backend.is_zero(self.value)

    def is_real(self) -> bool:
        return self.backend.is_real(self.value)

    def sign(self) -> int:
        return self.backend.real_sign(self.value)

    def sqrt(self) -> 'Scalar':
        return Scalar(self.backend.sqrt(self.value), self.backend)

    def cbrt(self) -> 'Scalar':
        return Scalar(self.backend.cbrt_real(self.value), self.backend)

    def to_backend(self, backend) -> 'Scalar':
        return Scalar(backend.convert(self.value, self.backend), backend)

    def render(self) -> str:
        return self.backend.render(self.value)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"Scalar({self.render()})"


def coerce_raw(x, backend):
    """Converte int, par racional, Scalar ou elemento bruto para o backend"""
    if isinstance(x, Scalar):
        _check_backend(x.backend, backend)
        return x.value
    if isinstance(x, bool):
        raise AlgebraError("Booleano não é escalar")
    if isinstance(x, int):
        return backend.from_int(x)
    if isinstance(x, tuple) and len(x) == 2:
        return backend.from_rational(x[0], x[1])
    if backend.exact:
        if hasattr(x, 'x') and hasattr(x, 'y'):
            return x
        return QQ_I.convert(x)
    if hasattr(x, 'x') and hasattr(x, 'y'):
        return get_backend('exact').to_float(x, backend)
    return backend.ctx.mpc(x)


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------

def pack(exps: Sequence[int]) -> int:
    key = 0
    for index, e in enumerate(exps):
        if e < 0 or e > _FIELD_MASK:
            raise AlgebraError(f"Expoente fora do intervalo: {e}")
        key |= e << (_FIELD_BITS * index)
    return key


@lru_cache(maxsize=None)
def unpack(key: int, nvars: int) -> Tuple[int, ...]:
    return tuple((key >> (_FIELD_BITS * i)) & _FIELD_MASK for i in range(nvars))


@lru_cache(maxsize=None)
def key_degree(key: int) -> int:
    degree = 0
    while key:
        degree += key & _FIELD_MASK
        key >>= _FIELD_BITS
    return degree


def unit_key(index: int) -> int:
    return 1 << (_FIELD_BITS * index)


def monomial_sort_key(exps: Sequence[int]):
    """Ordem lexicográfica graduada sobre (z1, z2, zb1, zb2, u)"""
    return (sum(exps), tuple(-e for e in exps))


def render_monomial(exps: Sequence[int], variables: Sequence[str] = JET_VARIABLES) -> str:
    parts = []
    for name, e in zip(variables, exps):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return '*'.join(parts) if parts else '1'


def factorial_of(exps: Sequence[int]) -> int:
    result = 1
    for e in exps:
        for k in range(2, e + 1):
            result *= k
    return result


def conjugate_exponents(exps: Sequence[int]) -> Tuple[int, ...]:
    """Troca z_j <-> zb_j num multi-índice de variáveis do jato"""
    return (exps[2], exps[3], exps[0], exps[1], exps[4])


# ---------------------------------------------------------------------------
# Poly
# ---------------------------------------------------------------------------

class Poly:
    """Polinômio/série truncada com coeficientes escalares"""

    __slots__ = ('terms', 'order', 'backend', 'variables')

    def __init__(self, terms: Dict[int, Any], order: int, backend=None,
                 variables: Tuple[str, ...] = JET_VARIABLES):
        self.backend = backend or get_backend('exact')
        self.order = order
        self.variables = tuple(variables)
        is_zero = self.backend.is_zero
        self.terms = {k: v for k, v in terms.items() if key_degree(k) <= order and not is_zero(v)}

    # construtores -----------------------------------------------------------
    @classmethod
    def _make(cls, terms: Dict[int, Any], order: int, backend, variables) -> 'Poly':
        poly = cls.__new__(cls)
        poly.terms = terms
        poly.order = order
        poly.backend = backend
        poly.variables = variables
        return poly

    @classmethod
    def zero(cls, order: int, backend=None, variables=JET_VARIABLES) -> 'Poly':
        return cls({}, order, backend, variables)

    @classmethod
    def constant(cls, c, order: int, backend=None, variables=JET_VARIABLES) -> 'Poly':
        backend = backend or get_backend('exact')
        return cls({0: coerce_raw(c, backend)}, order, backend, variables)

    @classmethod
    def variable(cls, name: str, order: int, backend=None, variables=JET_VARIABLES) -> 'Poly':
        index = tuple(variables).index(name)
        backend = backend or get_backend('exact')
        return cls({unit_key(index): backend.one}, order, backend, variables)

    @classmethod
    def monomial(cls, exps: Sequence[int], coeff=1, order: int = 6, backend=None,
                 variables=JET_VARIABLES) -> 'Poly':
        backend = backend or get_backend('exact')
        return cls({pack(exps): coerce_raw(coeff, backend)}, order, backend, variables)

    @classmethod
    def from_dict(cls, data: Dict[Tuple[int, ...], Any], order: int, backend=None,
                  variables=JET_VARIABLES) -> 'Poly':
        backend = backend or get_backend('exact')
        terms: Dict[int, Any] = {}
        for exps, c in data.items():
            key = pack(exps)
            terms[key] = terms.get(key, backend.zero) + coerce_raw(c, backend)
        return cls(terms, order, backend, variables)

    # acesso -----------------------------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.variables)

    def exponents(self) -> List[Tuple[int, ...]]:
        n = self.nvars
        return sorted((unpack(k, n) for k in self.terms), key=monomial_sort_key)

    def items(self) -> List[Tuple[Tuple[int, ...], Scalar]]:
        n = self.nvars
        pairs = [(unpack(k, n), Scalar(v, self.backend)) for k, v in self.terms.items()]
        return sorted(pairs, key=lambda pair: monomial_sort_key(pair[0]))

    def to_dict(self) -> Dict[Tuple[int, ...], Scalar]:
        return dict(self.items())

    def coefficient(self, exps: Sequence[int]) -> Scalar:
        return Scalar(self.terms.get(pack(exps), self.backend.zero), self.backend)

    def raw_coefficient(self, exps: Sequence[int]):
        return self.terms.get(pack(exps), self.backend.zero)

    def constant_term(self) -> Scalar:
        return Scalar(self.terms.get(0, self.backend.zero), self.backend)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def min_degree(self) -> int:
        return min((key_degree(k) for k in self.terms), default=self.order + 1)

    def max_degree(self) -> int:
        return max((key_degree(k) for k in self.terms), default=-1)

    # aritmética -------------------------------------------------------------
    def _compatible(self, other: 'Poly'):
        _check_backend(self.backend, other.backend)
        if self.variables != other.variables:
            raise AlgebraError(f"Variáveis incompatíveis: {self.variables} vs {other.variables}")

    def _lift(self, other) -> 'Poly':
        if isinstance(other, Poly):
            self._compatible(other)
            return other
        return Poly.constant(other, self.order, self.backend, self.variables)

    def __add__(self, other) -> 'Poly':
        other = self._lift(other)
        order = min(self.order, other.order)
        out = {k: v for k, v in self.terms.items() if key_degree(k) <= order}
        zero = self.backend.zero
        for k, v in other.terms.items():
            if key_degree(k) <= order:
                out[k] = out.get(k, zero) + v
        return Poly._make(_prune(out, self.backend), order, self.backend, self.variables)

    __radd__ = __add__

    def __neg__(self) -> 'Poly':
        return Poly._make({k: -v for k, v in self.terms.items()}, self.order, self.backend, self.variables)

    def __sub__(self, other) -> 'Poly':
        return self + (-self._lift(other))

    def __rsub__(self, other) -> 'Poly':
        return self._lift(other) + (-self)

    def scale(self, c) -> 'Poly':
        raw = coerce_raw(c, self.backend)
        if self.backend.is_zero(raw):
            return Poly.zero(self.order, self.backend, self.variables)
        return Poly._make({k: v * raw for k, v in self.terms.items()}, self.order, self.backend, self.variables)

    def __mul__(self, other) -> 'Poly':
        if not isinstance(other, Poly):
            return self.scale(other)
        self._compatible(other)
        order = min(self.order, other.order)
        return Poly._make(_mul_terms(self.terms, other.terms, order, self.backend), order,
                          self.backend, self.variables)

    def __rmul__(self, other) -> 'Poly':
        return self.scale(other)

    def __pow__(self, k: int) -> 'Poly':
        result = Poly.constant(1, self.order, self.backend, self.variables)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other) -> 'Poly':
        if isinstance(other, Poly):
            return self * other.inverse()
        return self.scale(self.backend.div(self.backend.one, coerce_raw(other, self.backend)))

    def inverse(self) -> 'Poly':
        """Inverso em série de uma unidade (termo constante não nulo)"""
        c0 = self.terms.get(0)
        if c0 is None:
            raise AlgebraError("Série sem termo constante não é invertível")
        inv_c0 = self.backend.div(self.backend.one, c0)
        rest = {k: -v * inv_c0 for k, v in self.terms.items() if k != 0}
        x = Poly._make(rest, self.order, self.backend, self.variables)
        result = Poly.constant(1, self.order, self.backend, self.variables)
        for _ in range(self.order):
            result = x * result + 1
        return result.scale(inv_c0)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            if isinstance(other, int) and other == 0:
                return self.is_zero()
            return NotImplemented
        if self.variables != other.variables or self.backend.key != other.backend.key:
            return False
        if self.backend.exact:
            return self.terms == other.terms
        return (self - other).is_zero()

    def __hash__(self):
        return hash((self.order, self.variables, frozenset(self.terms)))

    # transformações ---------------------------------------------------------
    def truncate(self, order: int) -> 'Poly':
        return Poly._make({k: v for k, v in self.terms.items() if key_degree(k) <= order},
                          order, self.backend, self.variables)

    def with_order(self, order: int) -> 'Poly':
        return self.truncate(order) if order < self.order else Poly._make(
            dict(self.terms), order, self.backend, self.variables)

    def homogeneous_part(self, degree: int) -> 'Poly':
        return Poly._make({k: v for k, v in self.terms.items() if key_degree(k) == degree},
                          self.order, self.backend, self.variables)

    def weighted_part(self, weights: Sequence[int], weight: int) -> 'Poly':
        n = self.nvars
        kept = {}
        for k, v in self.terms.items():
            exps = unpack(k, n)
            if sum(e * w for e, w in zip(exps, weights)) == weight:
                kept[k] = v
        return Poly._make(kept, self.order, self.backend, self.variables)

    def filter(self, predicate) -> 'Poly':
        n = self.nvars
        return Poly._make({k: v for k, v in self.terms.items() if predicate(unpack(k, n))},
                          self.order, self.backend, self.variables)

    def conjugate(self) -> 'Poly':
        """Troca z_j <-> zb_j e conjuga os coeficientes"""
        if self.variables != JET_VARIABLES:
            raise AlgebraError("Conjugação definida apenas nas variáveis do jato")
        conj = self.backend.conj
        out = {pack(conjugate_exponents(unpack(k, 5))): conj(v) for k, v in self.terms.items()}
        return Poly._make(out, self.order, self.backend, self.variables)

    def real_part(self) -> 'Poly':
        return (self + self.conjugate()).scale(self.backend.from_rational(1, 2))

    def imag_part(self) -> 'Poly':
        half_i = self.backend.from_rational(0, 1, -1, 2)
        return (self - self.conjugate()).scale(half_i)

    def derivative(self, var: str) -> 'Poly':
        index = self.variables.index(var)
        n = self.nvars
        step = unit_key(index)
        out = {}
        for k, v in self.terms.items():
            e = unpack(k, n)[index]
            if e:
                out[k - step] = v * self.backend.from_int(e)
        return Poly._make(out, self.order, self.backend, self.variables)

    def substitute(self, bindings: Dict[str, 'Poly']) -> 'Poly':
        """Substituição simultânea das variáveis por séries (truncada)

        Só as variáveis que de fato ocorrem precisam de imagem; sem substituições, um
        polinômio constante volta inalterado.
        """
        n = self.nvars
        used = set()
        for k in self.terms:
            for i, e in enumerate(unpack(k, n)):
                if e:
                    used.add(self.variables[i])
        missing = sorted(used - set(bindings))
        if missing:
            raise SubstitutionError(f"Variável sem substituição: {', '.join(missing)}")
        if not bindings:
            return self
        images = list(bindings.values())
        first = images[0]
        for image in images[1:]:
            first._compatible(image)
        _check_backend(self.backend, first.backend)
        order = min(image.order for image in images)
        zero_image = Poly.zero(order, first.backend, first.variables)
        table = MonomialTable([bindings.get(name, zero_image) for name in self.variables], order)
        result: Dict[int, Any] = {}
        zero = self.backend.zero
        for k, v in self.terms.items():
            product = table.get(unpack(k, n))
            for pk, pv in product.terms.items():
                result[pk] = result.get(pk, zero) + v * pv
        return Poly._make(_prune(result, self.backend), order, first.backend, first.variables)

    def to_backend(self, backend) -> 'Poly':
        if backend.key == self.backend.key:
            return self
        return Poly({k: backend.convert(v, self.backend) for k, v in self.terms.items()},
                    self.order, backend, self.variables)

    # apresentação -----------------------------------------------------------
    def render(self) -> str:
        if not self.terms:
            return '0'
        pieces: List[str] = []
        for exps, c in self.items():
            mono = render_monomial(exps, self.variables)
            text = c.render()
            simple = c.is_real() or (c.real().is_zero() and '*I' in text and not text.startswith('('))
            if mono == '1':
                term = text if simple else f"({text})"
            elif c == 1:
                term = mono
            elif c == -1:
                term = f"-{mono}"
            elif c.is_real():
                term = f"{text}*{mono}"
            else:
                term = f"({text})*{mono}"
            if not pieces:
                pieces.append(term)
            elif term.startswith('-'):
                pieces.append(f" - {term[1:]}")
            else:
                pieces.append(f" + {term}")
        return ''.join(pieces)

    def __str__(self):
        return self.render()

    def __repr__(self):
        return f"Poly({self.render()}, order={self.order})"


def _prune(terms: Dict[int, Any], backend) -> Dict[int, Any]:
    is_zero = backend.is_zero
    return {k: v for k, v in terms.items() if not is_zero(v)}


def _by_degree(terms: Dict[int, Any]) -> Dict[int, List[Tuple[int, Any]]]:
    buckets: Dict[int, List[Tuple[int, Any]]] = {}
    for k, v in terms.items():
        buckets.setdefault(key_degree(k), []).append((k, v))
    return buckets


def _mul_terms(a: Dict[int, Any], b: Dict[int, Any], order: int, backend) -> Dict[int, Any]:
    if not a or not b:
        return {}
    if len(a) < len(b):
        a, b = b, a
    buckets = _by_degree(b)
    top = max(buckets)
    out: Dict[int, Any] = {}
    get = out.get
    zero = backend.zero
    for ka, va in a.items():
        room = order - key_degree(ka)
        if room < 0:
            continue
        for d in range(min(room, top) + 1):
            bucket = buckets.get(d)
            if not bucket:
                continue
            for kb, vb in bucket:
                k = ka + kb
                out[k] = get(k, zero) + va * vb
    return _prune(out, backend)


class MonomialTable:
    """Tabela memoizada dos produtos prod_i images[i]^J_i"""

    def __init__(self, images: Sequence[Poly], order: int):
        self.images = list(images)
        self.order = order
        first = self.images[0]
        self._one = Poly.constant(1, order, first.backend, first.variables)
        self._zero = Poly.zero(order, first.backend, first.variables)
        self._min_degree = [image.min_degree() for image in self.images]
        self._cache: Dict[Tuple[int, ...], Poly] = {}

    def get(self, exps: Tuple[int, ...]) -> Poly:
        cached = self._cache.get(exps)
        if cached is not None:
            return cached
        last = max((i for i, e in enumerate(exps) if e), default=None)
        if last is None:
            return self._one
        lowest = sum(e * d for e, d in zip(exps, self._min_degree))
        if lowest > self.order:
            result = self._zero
        else:
            previous = list(exps)
            previous[last] -= 1
            result = self.get(tuple(previous)) * self.images[last]
        self._cache[exps] = result
        return result


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

class LinearSolution:
    """Solução particular, base do núcleo e colunas pivô"""

    def __init__(self, assignment: Dict[str, Scalar], nullspace: List[Dict[str, Scalar]],
                 pivots: List[str], rank: int):
        self.assignment = assignment
        self.nullspace = nullspace
        self.pivots = pivots
        self.rank = rank

    def __repr__(self):
        return f"LinearSolution(rank={self.rank}, nullity={len(self.nullspace)})"


def row_reduce(rows: List[List[Any]], ncols: int, backend) -> Tuple[List[List[Any]], List[int]]:
    """Forma escalonada reduzida; pivôs escolhidos da esquerda para a direita"""
    if not rows:
        return [], []
    if backend.exact:
        matrix = DomainMatrix([list(row) for row in rows], (len(rows), ncols), QQ_I)
        reduced, pivots = matrix.rref()
        return _domain_rows(reduced), list(pivots)
    return _float_rref([list(row) for row in rows], ncols, backend)


def _domain_rows(matrix) -> List[List[Any]]:
    if hasattr(matrix, 'to_list'):
        return matrix.to_list()
    return [list(row) for row in matrix.rep.to_ddm()]


def _float_rref(rows: List[List[Any]], ncols: int, backend) -> Tuple[List[List[Any]], List[int]]:
    scale = max((abs(x) for row in rows for x in row), default=1) or 1
    tolerance = backend.tolerance * max(1, scale) * 1024
    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r >= len(rows):
            break
        best = max(range(r, len(rows)), key=lambda i: abs(rows[i][c]))
        if abs(rows[best][c]) <= tolerance:
            continue
        rows[r], rows[best] = rows[best], rows[r]
        pivot = rows[r][c]
        rows[r] = [x / pivot for x in rows[r]]
        for i in range(len(rows)):
            if i != r:
                factor = rows[i][c]
                if abs(factor) > 0:
                    rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    for row in rows:
        for j, x in enumerate(row):
            if abs(x) <= tolerance:
                row[j] = backend.zero
    return rows, pivots


def solve_raw(rows: List[List[Any]], rhs: List[Any], ncols: int, backend):
    """Resolve A x = b; devolve (solução, base do núcleo, pivôs) ou Infeasible"""
    augmented = [list(row) + [b] for row, b in zip(rows, rhs)]
    reduced, pivots = row_reduce(augmented, ncols + 1, backend)
    if ncols in pivots:
        raise Infeasible("Sistema linear inconsistente")
    solution = [backend.zero] * ncols
    for r, c in enumerate(pivots):
        solution[c] = reduced[r][ncols]
    pivot_set = set(pivots)
    nullspace = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vector = [backend.zero] * ncols
        vector[free] = backend.one
        for r, c in enumerate(pivots):
            vector[c] = -reduced[r][free]
        nullspace.append(vector)
    return solution, nullspace, pivots


def rank_of(rows: List[List[Any]], ncols: int, backend) -> int:
    return len(row_reduce([list(row) for row in rows], ncols, backend)[1])


def solve_linear(equations: Sequence[Tuple[Dict[str, Any], Any]], unknowns: Sequence[str],
                 backend=None) -> LinearSolution:
    """Resolve um sistema linear nomeado; colunas na ordem de `unknowns`"""
    backend = backend or get_backend('exact')
    unknowns = list(unknowns)
    index = {name: i for i, name in enumerate(unknowns)}
    rows, rhs = [], []
    for coefficients, value in equations:
        row = [backend.zero] * len(unknowns)
        for name, c in coefficients.items():
            if name not in index:
                raise AlgebraError(f"Incógnita desconhecida: {name}")
            row[index[name]] = row[index[name]] + coerce_raw(c, backend)
        rows.append(row)
        rhs.append(coerce_raw(value, backend))
    if not rows:
        nullspace = [{name: Scalar(backend.one if name == free else backend.zero, backend)
                      for name in unknowns} for free in unknowns]
        return LinearSolution({name: Scalar(backend.zero, backend) for name in unknowns}, nullspace, [], 0)
    solution, nullspace, pivots = solve_raw(rows, rhs, len(unknowns), backend)
    assignment = {name: Scalar(solution[i], backend) for i, name in enumerate(unknowns)}
    basis = [{name: Scalar(vector[i], backend) for i, name in enumerate(unknowns)} for vector in nullspace]
    return LinearSolution(assignment, basis, [unknowns[c] for c in pivots], len(pivots))


def invert_matrix(matrix: List[List[Any]], backend) -> List[List[Any]]:
    """Inversa de matriz quadrada (elementos brutos) ou AlgebraError se singular"""
    n = len(matrix)
    augmented = [list(row) + [backend.one if i == j else backend.zero for j in range(n)]
                 for i, row in enumerate(matrix)]
    reduced, pivots = row_reduce(augmented, 2 * n, backend)
    if pivots[:n] != list(range(n)):
        raise AlgebraError("Matriz singular")
    return [row[n:] for row in reduced[:n]]
