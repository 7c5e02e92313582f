import os
from math import factorial
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import pandas as pd
from dotenv import load_dotenv

from errors import InternalRankMismatch, NotSolvable
from exact_algebra import Poly, conjugate_exponents, factorial_of, get_backend
from hypersurface_jets import JetSeries, is_pure
from prolongation import ProlongedCoefficient, VFDerivative, canonicalize_derivative, phi_prolonged, render_index

load_dotenv()

FAMILIES = ('mu1', 'mu2', 'mubar1', 'mubar2', 'alpha', 'gamma')
LIFTED_NAMES = ('Z1', 'Z2', 'Zb1', 'Zb2', 'U', 'V')
JET_NAMES = LIFTED_NAMES[:5]
_FAMILY_OF = {'xi1': 'mu1', 'xi2': 'mu2', 'xibar1': 'mubar1', 'xibar2': 'mubar2', 'eta': 'alpha', 'phi': 'gamma'}
_COMPONENT_OF = {family: component for component, family in _FAMILY_OF.items()}
_CONJUGATE_FAMILY = {'mu1': 'mubar1', 'mu2': 'mubar2', 'mubar1': 'mu1', 'mubar2': 'mu2',
                     'alpha': 'alpha', 'gamma': 'gamma'}
_FAMILY_RANK = {name: i for i, name in enumerate(FAMILIES)}
_INDEX_WEIGHTS = (1, 1, 1, 1, 3, 3)

Jet = Tuple[int, ...]
Monomial = Tuple[Jet, ...]


# ---------------------------------------------------------------------------
# Símbolos
# ---------------------------------------------------------------------------

class MCSymbol(NamedTuple):
    """Forma de Maurer-Cartan da base (ou parte real/imaginária de uma)"""
    family: str
    index: Tuple[int, ...]
    part: str = ''

    @property
    def order(self) -> int:
        return sum(self.index)

    @property
    def shift(self) -> int:
        """Deslocamento de peso: a forma entra nas relações de peso shift + 3"""
        weight = sum(e * w for e, w in zip(self.index, _INDEX_WEIGHTS))
        return weight - 1 if self.family.startswith('mu') else weight - 3

    @property
    def is_real(self) -> bool:
        if self.part or self.family == 'gamma':
            return True
        return self.family == 'alpha' and not any(self.index[:4])

    @property
    def is_conjugate_side(self) -> bool:
        if self.family in ('mubar1', 'mubar2'):
            return True
        return self.family == 'alpha' and sum(self.index[2:4]) > 0

    def conjugate(self) -> 'MCSymbol':
        if self.is_real:
            return self
        i = self.index
        return MCSymbol(_CONJUGATE_FAMILY[self.family], (i[2], i[3], i[0], i[1], i[4], i[5]))

    def representative(self) -> 'MCSymbol':
        base = MCSymbol(self.family, self.index)
        return base.conjugate() if base.is_conjugate_side else base

    def re(self) -> 'MCSymbol':
        rep = self.representative()
        return MCSymbol(rep.family, rep.index, 're')

    def im(self) -> 'MCSymbol':
        rep = self.representative()
        return MCSymbol(rep.family, rep.index, 'im')

    def coordinates(self) -> List['MCSymbol']:
        """Coordenadas reais da forma"""
        if self.is_real:
            return [self]
        return [self.re(), self.im()]

    def base(self) -> 'MCSymbol':
        return MCSymbol(self.family, self.index)

    def render(self) -> str:
        suffix = render_index(self.index, LIFTED_NAMES)
        name = f"{self.family}_{suffix}" if suffix else self.family
        if self.part == 're':
            return f"Re({name})"
        if self.part == 'im':
            return f"Im({name})"
        return name

    def sort_key(self):
        return (self.order, self.shift, _FAMILY_RANK[self.family], tuple(-e for e in self.index), self.part)


def from_vf(d: VFDerivative) -> MCSymbol:
    return MCSymbol(_FAMILY_OF[d.component], tuple(d.index))


def reduce_symbol(symbol: MCSymbol, backend=None) -> List[Tuple[Any, MCSymbol]]:
    """Reescrita na base; lista vazia quando a forma se anula"""
    terms = canonicalize_derivative(_COMPONENT_OF[symbol.family], symbol.index, backend)
    return [(c, from_vf(d)) for c, d in terms]


def render_lifted(K: Sequence[int]) -> str:
    return 'V_' + render_index(K, JET_NAMES)


def relation_indices(order: int) -> List[Jet]:
    """Índices mistos de ordem dada, um por par conjugado (grau holomorfo ≥ antiholomorfo)"""
    out = []
    for a1 in range(order + 1):
        for a2 in range(order + 1 - a1):
            for b1 in range(order + 1 - a1 - a2):
                for b2 in range(order + 1 - a1 - a2 - b1):
                    J = (a1, a2, b1, b2, order - a1 - a2 - b1 - b2)
                    if is_pure(J):
                        continue
                    holo, anti = a1 + a2, b1 + b2
                    if holo < anti or (holo == anti and J < conjugate_exponents(J)):
                        continue
                    out.append(J)
    return sorted(out, key=lambda J: (J[4], tuple(-x for x in J)))


# ---------------------------------------------------------------------------
# Coeficientes polinomiais nos invariantes levantados
# ---------------------------------------------------------------------------

class LiftedPoly:
    """Polinômio nos V_K (monômio = tupla ordenada de multi-índices)"""

    __slots__ = ('terms', 'backend')

    def __init__(self, terms: Dict[Monomial, Any], backend=None):
        self.backend = backend or get_backend('exact')
        is_zero = self.backend.is_zero
        self.terms = {m: c for m, c in terms.items() if not is_zero(c)}

    @classmethod
    def constant(cls, c, backend=None) -> 'LiftedPoly':
        backend = backend or get_backend('exact')
        return cls({(): c}, backend)

    @classmethod
    def jet(cls, K: Sequence[int], backend=None) -> 'LiftedPoly':
        backend = backend or get_backend('exact')
        return cls({(tuple(K),): backend.one}, backend)

    @classmethod
    def zero(cls, backend=None) -> 'LiftedPoly':
        return cls({}, backend)

    def __add__(self, other: 'LiftedPoly') -> 'LiftedPoly':
        out = dict(self.terms)
        zero = self.backend.zero
        for m, c in other.terms.items():
            out[m] = out.get(m, zero) + c
        return LiftedPoly(out, self.backend)

    def __neg__(self) -> 'LiftedPoly':
        return LiftedPoly({m: -c for m, c in self.terms.items()}, self.backend)

    def __sub__(self, other: 'LiftedPoly') -> 'LiftedPoly':
        return self + (-other)

    def scale(self, c) -> 'LiftedPoly':
        return LiftedPoly({m: v * c for m, v in self.terms.items()}, self.backend)

    def __mul__(self, other) -> 'LiftedPoly':
        if not isinstance(other, LiftedPoly):
            return self.scale(other)
        out: Dict[Monomial, Any] = {}
        zero = self.backend.zero
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                m = tuple(sorted(ma + mb))
                out[m] = out.get(m, zero) + ca * cb
        return LiftedPoly(out, self.backend)

    def conjugate(self) -> 'LiftedPoly':
        conj = self.backend.conj
        return LiftedPoly({tuple(sorted(conjugate_exponents(K) for K in m)): conj(c)
                           for m, c in self.terms.items()}, self.backend)

    def real_part(self) -> 'LiftedPoly':
        return (self + self.conjugate()).scale(self.backend.from_rational(1, 2))

    def imag_part(self) -> 'LiftedPoly':
        return (self - self.conjugate()).scale(self.backend.from_rational(0, 1, -1, 2))

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(not m for m in self.terms)

    def constant_value(self):
        return self.terms.get((), self.backend.zero)

    def jets(self) -> List[Jet]:
        return sorted({K for m in self.terms for K in m})

    def substitute(self, value_of: Callable[[Jet], Any]) -> 'LiftedPoly':
        """Troca cada V_K com valor conhecido; value_of devolve None para manter V_K"""
        out: Dict[Monomial, Any] = {}
        zero = self.backend.zero
        for m, c in self.terms.items():
            kept: List[Jet] = []
            coeff = c
            for K in m:
                value = value_of(K)
                if value is None:
                    kept.append(K)
                else:
                    coeff = coeff * value
            key = tuple(kept)
            out[key] = out.get(key, zero) + coeff
        return LiftedPoly(out, self.backend)

    def __eq__(self, other):
        if not isinstance(other, LiftedPoly):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms))

    def render(self) -> str:
        if not self.terms:
            return '0'
        backend = self.backend
        pieces = []
        for m, c in sorted(self.terms.items(), key=lambda item: (len(item[0]), item[0])):
            factors = '*'.join(render_lifted(K) for K in m)
            text = backend.render(c)
            if not factors:
                term = text if backend.is_real(c) else f"({text})"
            elif c == backend.one:
                term = factors
            elif c == -backend.one:
                term = f"-{factors}"
            elif backend.is_real(c):
                term = f"{text}*{factors}"
            else:
                term = f"({text})*{factors}"
            if pieces and term.startswith('-'):
                pieces.append(f" - {term[1:]}")
            elif pieces:
                pieces.append(f" + {term}")
            else:
                pieces.append(term)
        return ''.join(pieces)


# ---------------------------------------------------------------------------
# Expressões em formas de Maurer-Cartan
# ---------------------------------------------------------------------------

class MCExpr:
    """Combinação linear de formas de Maurer-Cartan com coeficientes em V_K"""

    __slots__ = ('terms', 'horizontal', 'backend', 'unresolved')

    def __init__(self, terms: Dict[MCSymbol, LiftedPoly], horizontal: Optional[Jet] = None,
                 backend=None, unresolved: Sequence[Jet] = ()):
        self.backend = backend or get_backend('exact')
        self.terms = {s: c for s, c in terms.items() if not c.is_zero()}
        self.horizontal = tuple(horizontal) if horizontal is not None else None
        self.unresolved = tuple(unresolved)

    @classmethod
    def zero(cls, backend=None) -> 'MCExpr':
        return cls({}, None, backend)

    @classmethod
    def of(cls, pairs: Iterable[Tuple[MCSymbol, Any]], backend=None) -> 'MCExpr':
        """Expressão com coeficientes constantes"""
        backend = backend or get_backend('exact')
        expr = cls.zero(backend)
        for symbol, c in pairs:
            expr = expr + cls({symbol: LiftedPoly.constant(c, backend)}, None, backend)
        return expr

    def _with(self, terms: Dict[MCSymbol, LiftedPoly]) -> 'MCExpr':
        return MCExpr(terms, self.horizontal, self.backend, self.unresolved)

    def __add__(self, other: 'MCExpr') -> 'MCExpr':
        out = dict(self.terms)
        for s, c in other.terms.items():
            out[s] = out[s] + c if s in out else c
        horizontal = self.horizontal if self.horizontal is not None else other.horizontal
        return MCExpr(out, horizontal, self.backend, tuple(sorted(set(self.unresolved) | set(other.unresolved))))

    def __neg__(self) -> 'MCExpr':
        return self._with({s: -c for s, c in self.terms.items()})

    def __sub__(self, other: 'MCExpr') -> 'MCExpr':
        return self + (-other)

    def scale(self, c) -> 'MCExpr':
        return self._with({s: v.scale(c) for s, v in self.terms.items()})

    def times(self, factor: LiftedPoly) -> 'MCExpr':
        return self._with({s: v * factor for s, v in self.terms.items()})

    def conjugate(self) -> 'MCExpr':
        out: Dict[MCSymbol, LiftedPoly] = {}
        for s, c in self.terms.items():
            target = s if s.part else s.conjugate()
            out[target] = out[target] + c.conjugate() if target in out else c.conjugate()
        horizontal = conjugate_exponents(self.horizontal) if self.horizontal is not None else None
        return MCExpr(out, horizontal, self.backend, self.unresolved)

    def modulo_horizontal(self) -> 'MCExpr':
        return MCExpr(self.terms, None, self.backend, self.unresolved)

    def coefficient(self, symbol: MCSymbol) -> LiftedPoly:
        if symbol.part or symbol.is_real:
            return self.real_coefficients().get(symbol, LiftedPoly.zero(self.backend))
        return self.terms.get(symbol, LiftedPoly.zero(self.backend))

    def symbols(self) -> List[MCSymbol]:
        return sorted(self.terms, key=MCSymbol.sort_key)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.terms.values())

    def real_coefficients(self) -> Dict[MCSymbol, LiftedPoly]:
        """Coeficientes nas coordenadas reais: Re s ↦ c_s + c_s̄, Im s ↦ i(c_s − c_s̄)"""
        i = self.backend.i
        out: Dict[MCSymbol, LiftedPoly] = {}

        def add(coord, value):
            out[coord] = out[coord] + value if coord in out else value

        for s, c in self.terms.items():
            if s.is_real:
                add(s, c)
            elif s.is_conjugate_side:
                add(s.re(), c)
                add(s.im(), c.scale(-i))
            else:
                add(s.re(), c)
                add(s.im(), c.scale(i))
        return {s: c for s, c in out.items() if not c.is_zero()}

    def real_form(self) -> 'MCExpr':
        return self._with(self.real_coefficients())

    def real_part(self) -> 'MCExpr':
        return self._with({s: c.real_part() for s, c in self.real_coefficients().items()})

    def imag_part(self) -> 'MCExpr':
        return self._with({s: c.imag_part() for s, c in self.real_coefficients().items()})

    def real_row(self, part: str) -> Dict[MCSymbol, Any]:
        """Linha real constante (parte 're' ou 'im' da relação)"""
        source = self.real_part() if part == 're' else self.imag_part()
        row = {}
        for s, c in source.terms.items():
            if not c.is_constant():
                raise NotSolvable(f"Coeficiente não constante em {s.render()}: {c.render()}")
            row[s] = self.backend.real(c.constant_value())
        return {s: v for s, v in row.items() if not self.backend.is_zero(v)}

    def substitute_values(self, value_of: Callable[[Jet], Any]) -> 'MCExpr':
        return self._with({s: c.substitute(value_of) for s, c in self.terms.items()})

    def drop(self, predicate: Callable[[MCSymbol], bool]) -> 'MCExpr':
        return self._with({s: c for s, c in self.terms.items() if not predicate(s)})

    def __eq__(self, other):
        if not isinstance(other, MCExpr):
            return NotImplemented
        return (self - other).real_form().is_zero()

    def __hash__(self):
        return hash(frozenset(self.terms))

    def render(self) -> str:
        pieces = []
        if self.horizontal is not None:
            pieces.append('varpi_' + render_index(self.horizontal, JET_NAMES))
        for s in self.symbols():
            c = self.terms[s]
            text = c.render()
            if len(c.terms) > 1:
                term = f"({text})*{s.render()}"
            elif text == '1':
                term = s.render()
            elif text == '-1':
                term = f"-{s.render()}"
            elif text.startswith('(') or '*' in text or text.lstrip('-').replace('/', '').isdigit():
                term = f"{text}*{s.render()}"
            else:
                term = f"({text})*{s.render()}"
            if pieces and term.startswith('-'):
                pieces.append(f" - {term[1:]}")
            elif pieces:
                pieces.append(f" + {term}")
            else:
                pieces.append(term)
        return ''.join(pieces) if pieces else '0'

    def to_structured(self) -> Dict[str, str]:
        data = {s.render(): self.terms[s].render() for s in self.symbols()}
        if self.horizontal is not None:
            data['varpi'] = render_index(self.horizontal, JET_NAMES)
        return data

    def __repr__(self):
        return f"MCExpr({self.render()})"


# ---------------------------------------------------------------------------
# Invariantização e fórmula de recorrência
# ---------------------------------------------------------------------------

def invariantize(pc: ProlongedCoefficient) -> MCExpr:
    """v_K ↦ V_K e derivadas do campo ↦ formas de Maurer-Cartan da base"""
    backend = pc.backend
    out: Dict[MCSymbol, Dict[Monomial, Any]] = {}
    zero = backend.zero
    for (monomial, d), c in pc.terms.items():
        for factor, symbol in reduce_symbol(from_vf(d), backend):
            bucket = out.setdefault(symbol, {})
            bucket[monomial] = bucket.get(monomial, zero) + c * factor
    return MCExpr({s: LiftedPoly(terms, backend) for s, terms in out.items()}, pc.J, backend)


def recurrence(J: Sequence[int], ledger: Optional['Ledger'] = None, modulo_horizontal: bool = False,
               backend=None) -> MCExpr:
    """dV_J = ϖ_J + invariantização de φ^J, com o ledger aplicado"""
    backend = backend or (ledger.backend if ledger is not None else get_backend('exact'))
    expr = invariantize(phi_prolonged(tuple(J), backend))
    if ledger is not None:
        expr = ledger.reduce(expr)
    return expr.modulo_horizontal() if modulo_horizontal else expr


# ---------------------------------------------------------------------------
# Ledger de normalizações
# ---------------------------------------------------------------------------

class LedgerEntry(NamedTuple):
    target: str
    value: str
    solved: MCSymbol
    expression: str


def _elementary_vanishing(symbol: MCSymbol) -> bool:
    if symbol.order == 0:
        return True
    if symbol.family != 'alpha':
        return False
    i = symbol.index
    return bool(sum(i[:2]) or sum(i[2:4]) or i[5])


class Ledger:
    """Normalizações acumuladas: valores na fibra, fantasmas e formas resolvidas"""

    def __init__(self, backend=None, fiber: Optional[Dict[Jet, Any]] = None, pure_pinned: bool = False,
                 elementary: bool = False, priority: Optional[Callable[[MCSymbol], Any]] = None):
        self.backend = backend or get_backend('exact')
        self.fiber: Dict[Jet, Any] = dict(fiber or {})
        self.phantoms: Dict[Jet, Any] = {}
        self.part_phantoms: Dict[Tuple[Jet, str], Any] = {}
        self.pure_pinned = pure_pinned
        self.elementary = elementary
        self.priority = priority or MCSymbol.sort_key
        self.solutions: Dict[MCSymbol, Dict[MCSymbol, Any]] = {}
        self.entries: List[LedgerEntry] = []
        self.universe: List[MCSymbol] = []
        self.verbose = os.getenv('CR_VERBOSE', '0') == '1'

    # valores ----------------------------------------------------------------
    def phantom_value(self, K: Jet):
        K = tuple(K)
        if K in self.phantoms:
            return self.phantoms[K]
        if self.pure_pinned and is_pure(K):
            return self.backend.zero
        return None

    def fiber_value(self, K: Jet):
        value = self.phantom_value(K)
        return self.fiber.get(tuple(K)) if value is None else value

    def pin(self, K: Jet, value, part: str = ''):
        if part:
            self.part_phantoms[(tuple(K), part)] = value
        else:
            self.phantoms[tuple(K)] = value

    # formas -----------------------------------------------------------------
    def is_vanishing(self, symbol: MCSymbol) -> bool:
        return self.elementary and _elementary_vanishing(symbol.base())

    def is_solved(self, coord: MCSymbol) -> bool:
        return coord in self.solutions or self.is_vanishing(coord)

    def reduce_row(self, row: Dict[MCSymbol, Any]) -> Dict[MCSymbol, Any]:
        out: Dict[MCSymbol, Any] = {}
        zero = self.backend.zero
        for coord, c in row.items():
            if self.is_vanishing(coord):
                continue
            form = self.solutions.get(coord)
            if form is None:
                out[coord] = out.get(coord, zero) + c
                continue
            for other, f in form.items():
                out[other] = out.get(other, zero) + c * f
        is_zero = self.backend.is_zero
        return {s: v for s, v in out.items() if not is_zero(v)}

    def _record(self, coord: MCSymbol, form: Dict[MCSymbol, Any], target: str, value: str):
        if self.is_solved(coord):
            raise InternalRankMismatch(f"{coord.render()} já foi normalizada")
        if any(self.is_solved(other) or other == coord for other in form):
            raise InternalRankMismatch(f"Substituição não triangular para {coord.render()}")
        zero = self.backend.zero
        is_zero = self.backend.is_zero
        for solved, existing in self.solutions.items():
            c = existing.pop(coord, None)
            if c is None:
                continue
            for other, f in form.items():
                existing[other] = existing.get(other, zero) + c * f
            self.solutions[solved] = {s: v for s, v in existing.items() if not is_zero(v)}
        self.solutions[coord] = dict(form)
        self.entries.append(LedgerEntry(target, value, coord, render_form(form, self.backend)))
        if self.verbose:
            print(f"🔧 {target}: {coord.render()} = {render_form(form, self.backend)}")

    def insert(self, row: Dict[MCSymbol, Any], target: str = '', value: str = '0') -> Optional[MCSymbol]:
        """Insere a relação row = 0; devolve a coordenada resolvida ou None se dependente"""
        reduced = self.reduce_row(row)
        if not reduced:
            return None
        pivot = min(reduced, key=self.priority)
        c = reduced.pop(pivot)
        inverse = self.backend.div(-self.backend.one, c)
        self._record(pivot, {s: v * inverse for s, v in reduced.items()}, target, value)
        return pivot

    def unsolved(self, coords: Iterable[MCSymbol]) -> List[MCSymbol]:
        return sorted((c for c in coords if not self.is_solved(c)), key=MCSymbol.sort_key)

    def residual(self, max_order: int = 2) -> List[MCSymbol]:
        """Coordenadas de ordem ≤ max_order ainda livres"""
        return self.unsolved(c for c in self.universe if 1 <= c.order <= max_order)

    # expressões -------------------------------------------------------------
    def reduce(self, expr: MCExpr) -> MCExpr:
        """Fantasmas nos coeficientes, formas nulas removidas e resolvidas substituídas"""
        expr = expr.substitute_values(self.phantom_value).drop(self.is_vanishing)
        if not self.solutions:
            return expr
        touched = {s for s in expr.terms if any(c in self.solutions for c in s.coordinates())}
        if not touched:
            return expr
        kept = MCExpr({s: c for s, c in expr.terms.items() if s not in touched}, expr.horizontal,
                      self.backend, expr.unresolved)
        split = MCExpr({s: c for s, c in expr.terms.items() if s in touched}, None, self.backend).real_coefficients()
        out: Dict[MCSymbol, LiftedPoly] = {}
        for coord, c in split.items():
            form = self.solutions.get(coord)
            if form is None:
                out[coord] = out[coord] + c if coord in out else c
                continue
            for other, f in form.items():
                piece = c.scale(f)
                out[other] = out[other] + piece if other in out else piece
        return kept + MCExpr(out, None, self.backend)

    def copy(self) -> 'Ledger':
        clone = Ledger(self.backend, self.fiber, self.pure_pinned, self.elementary, self.priority)
        clone.phantoms = dict(self.phantoms)
        clone.part_phantoms = dict(self.part_phantoms)
        clone.solutions = {k: dict(v) for k, v in self.solutions.items()}
        clone.entries = list(self.entries)
        clone.universe = list(self.universe)
        return clone

    def trace(self) -> pd.DataFrame:
        rows = [{'alvo': e.target, 'valor': e.value, 'simbolo': e.solved.render(), 'expressao': e.expression}
                for e in self.entries]
        return pd.DataFrame(rows, columns=['alvo', 'valor', 'simbolo', 'expressao'])

    def __len__(self):
        return len(self.solutions)


def render_form(form: Dict[MCSymbol, Any], backend) -> str:
    if not form:
        return '0'
    pieces = []
    for s in sorted(form, key=MCSymbol.sort_key):
        c = form[s]
        if c == backend.one:
            term = s.render()
        elif c == -backend.one:
            term = f"-{s.render()}"
        else:
            term = f"{backend.render(c)}*{s.render()}"
        if pieces and term.startswith('-'):
            pieces.append(f" - {term[1:]}")
        elif pieces:
            pieces.append(f" + {term}")
        else:
            pieces.append(term)
    return ''.join(pieces)


def elementary_ledger(backend=None) -> Ledger:
    """Normalizações de ordem ≤ 1: termos puros nulos e α_{Z^ℓ…}, α_{U^kV}, formas de ordem 0 resolvidas"""
    return Ledger(backend, pure_pinned=True, elementary=True)


def restrict_to_fiber(rel: MCExpr, ledger: Ledger, keep_symbolic: Sequence[Jet] = ()) -> MCExpr:
    """Valores da fibra nos coeficientes; V_K desconhecidos permanecem e são reportados"""
    keep = {tuple(K) for K in keep_symbolic}

    def value_of(K):
        return None if K in keep else ledger.fiber_value(K)

    expr = rel.substitute_values(value_of)
    missing = sorted({K for c in expr.terms.values() for K in c.jets()})
    expr = ledger.reduce(expr)
    return MCExpr(expr.terms, expr.horizontal, expr.backend, tuple(missing))


def solve_for(rel: MCExpr, target: MCSymbol, phantom_value, ledger: Ledger,
              relation_part: Optional[str] = None) -> Ledger:
    """Fixa V_J = phantom_value e resolve a relação para target"""
    backend = ledger.backend
    expr = restrict_to_fiber(rel, ledger)
    if expr.unresolved:
        raise NotSolvable("Invariantes sem valor na fibra: " + ', '.join(render_lifted(K) for K in expr.unresolved))
    rows = {part: ledger.reduce_row(expr.real_row(part)) for part in ('re', 'im')}
    label = render_lifted(rel.horizontal) if rel.horizontal is not None else 'relação'
    value = backend.render(phantom_value)
    if not target.is_real and not target.part:
        x, y = target.re(), target.im()
        a11, a12 = rows['re'].get(x, backend.zero), rows['re'].get(y, backend.zero)
        a21, a22 = rows['im'].get(x, backend.zero), rows['im'].get(y, backend.zero)
        det = a11 * a22 - a12 * a21
        if backend.is_zero(det):
            raise NotSolvable(f"Coeficiente de {target.render()} não invertível na fibra")
        zero = backend.zero
        rest1 = {s: v for s, v in rows['re'].items() if s not in (x, y)}
        rest2 = {s: v for s, v in rows['im'].items() if s not in (x, y)}
        keys = set(rest1) | set(rest2)
        form_x = {s: backend.div(-a22 * rest1.get(s, zero) + a12 * rest2.get(s, zero), det) for s in keys}
        form_y = {s: backend.div(a21 * rest1.get(s, zero) - a11 * rest2.get(s, zero), det) for s in keys}
        ledger._record(x, {s: v for s, v in form_x.items() if not backend.is_zero(v)}, label, value)
        ledger._record(y, {s: v for s, v in form_y.items() if not backend.is_zero(v)}, label, value)
    else:
        parts = [relation_part] if relation_part else ['re', 'im']
        chosen = next((p for p in parts if not backend.is_zero(rows[p].get(target, backend.zero))), None)
        if chosen is None:
            raise NotSolvable(f"Coeficiente de {target.render()} se anula na fibra")
        row = dict(rows[chosen])
        c = row.pop(target)
        inverse = backend.div(-backend.one, c)
        ledger._record(target, {s: v * inverse for s, v in row.items()}, f"{chosen} {label}", value)
    if rel.horizontal is not None:
        ledger.pin(rel.horizontal, phantom_value)
    return ledger


# ---------------------------------------------------------------------------
# Rota rápida na fibra
# ---------------------------------------------------------------------------

def basis_symbols(order: int) -> List[MCSymbol]:
    """Representantes da base de ordem 1..order (μ^j, α holomorfas e α reais)"""
    symbols: List[MCSymbol] = []
    for total in range(1, order + 1):
        for l1 in range(total + 1):
            for l2 in range(total + 1 - l1):
                m = total - l1 - l2
                index = (l1, l2, 0, 0, m, 0)
                symbols.append(MCSymbol('mu1', index))
                symbols.append(MCSymbol('mu2', index))
                if l1 + l2:
                    symbols.append(MCSymbol('alpha', index))
        symbols.append(MCSymbol('alpha', (0, 0, 0, 0, total, 0)))
        symbols.append(MCSymbol('alpha', (0, 0, 0, 0, total - 1, 1)))
    return sorted(symbols, key=MCSymbol.sort_key)


def basis_coordinates(order: int) -> List[MCSymbol]:
    return [coord for s in basis_symbols(order) for coord in s.coordinates()]


class FiberCalculus:
    """Relações dV_J numa fibra: coeficiente de s = J!·[x^J] da variação de v pelo campo elementar de s"""

    def __init__(self, fiber: JetSeries, order: Optional[int] = None):
        self.series = fiber if order is None else fiber.with_order(order)
        self.order = self.series.order
        self.backend = self.series.backend
        backend = self.backend
        v = self.series.poly
        self._v_u = v.derivative('u')
        self._v_z = (v.derivative('z1'), v.derivative('z2'))
        self._w = Poly.variable('u', self.order, backend) + v.scale(backend.i)
        self._w_powers = [Poly.constant(1, self.order, backend)]
        self._q: Dict[MCSymbol, Poly] = {}
        self.symbols = basis_symbols(self.order)

    def _power(self, m: int) -> Poly:
        while len(self._w_powers) <= m:
            self._w_powers.append(self._w_powers[-1] * self._w)
        return self._w_powers[m]

    def _holomorphic_monomial(self, index: Sequence[int]) -> Poly:
        l1, l2, m = index[0], index[1], index[4]
        backend = self.backend
        scale = backend.from_rational(1, factorial(l1) * factorial(l2) * factorial(m))
        return Poly.monomial((l1, l2, 0, 0, 0), scale, self.order, backend) * self._power(m)

    def variation(self, symbol: MCSymbol) -> Poly:
        """Q_s para um representante"""
        cached = self._q.get(symbol)
        if cached is not None:
            return cached
        backend = self.backend
        index = symbol.index
        if symbol.family in ('mu1', 'mu2'):
            j = 0 if symbol.family == 'mu1' else 1
            q = -(self._holomorphic_monomial(index) * self._v_z[j])
        elif symbol.family == 'alpha' and sum(index[:2]):
            h = self._holomorphic_monomial(index)
            q = -(h.scale(backend.i) + h * self._v_u)
        elif symbol.family == 'alpha':
            k, extra = index[4], index[5]
            if extra:
                g = self._power(k + 1).scale(backend.div(-backend.i, backend.from_int(factorial(k + 1))))
            else:
                g = self._power(k).scale(backend.from_rational(1, factorial(k)))
            q = g.imag_part() - g.real_part() * self._v_u
        else:
            raise NotSolvable(f"Forma sem campo elementar: {symbol.render()}")
        self._q[symbol] = q
        return q

    def relation(self, J: Sequence[int]) -> MCExpr:
        """dV_J na fibra, módulo formas horizontais, sem normalizações"""
        J = tuple(J)
        backend = self.backend
        scale = backend.from_int(factorial_of(J))
        J_bar = conjugate_exponents(J)
        terms: Dict[MCSymbol, LiftedPoly] = {}
        for s in self.symbols:
            if s.order > sum(J):
                continue
            q = self.variation(s)
            c = q.raw_coefficient(J)
            if not backend.is_zero(c):
                terms[s] = LiftedPoly.constant(c * scale, backend)
            if not s.is_real:
                c_bar = backend.conj(q.raw_coefficient(J_bar))
                if not backend.is_zero(c_bar):
                    terms[s.conjugate()] = LiftedPoly.constant(c_bar * scale, backend)
        return MCExpr(terms, J, backend)

    def fiber_values(self) -> Dict[Jet, Any]:
        backend = self.backend
        return {exps: c.value * backend.from_int(factorial_of(exps)) for exps, c in self.series.items()}


def fiber_recurrence(J: Sequence[int], fiber: JetSeries, ledger: Optional[Ledger] = None,
                     calculus: Optional[FiberCalculus] = None) -> MCExpr:
    calculus = calculus or FiberCalculus(fiber)
    expr = calculus.relation(J).modulo_horizontal()
    return ledger.reduce(expr) if ledger is not None else expr


def fiber_ledger(fiber: JetSeries, priority: Optional[Callable[[MCSymbol], Any]] = None) -> Ledger:
    """Ledger vazio com os valores V_K da fibra"""
    calculus = FiberCalculus(fiber)
    ledger = Ledger(fiber.backend, fiber=calculus.fiber_values(), priority=priority)
    ledger.universe = basis_coordinates(fiber.order)
    return ledger


def branch_ledger(tag, fiber: JetSeries, order: Optional[int] = None, max_weight: Optional[int] = None,
                  invariants=None) -> Ledger:
    """Ledger completo do ramo: relações de todas as condições da seção transversal, peso a peso"""
    from cross_sections import column_priority, complete_cross_section, read_invariants, violations

    order = order or fiber.order
    series = fiber.with_order(order)
    invariants = invariants or read_invariants(tag, series.cubic())
    calculus = FiberCalculus(series)
    ledger = Ledger(series.backend, fiber=calculus.fiber_values(), priority=column_priority(tag))
    ledger.universe = basis_coordinates(order)
    conditions = complete_cross_section(tag, invariants, order, series.backend)
    backend = series.backend
    for condition in sorted(conditions, key=lambda c: c.sort_key()):
        if max_weight is not None and condition.weight > max_weight:
            continue
        if condition.contributes:
            expr = calculus.relation(condition.J)
            for part in condition.parts():
                row = {s: v for s, v in expr.real_row(part).items() if s.order >= 1}
                ledger.insert(row, condition.label(), backend.render(condition.jet_value(backend)))
        if violations([condition], series):
            continue
        if condition.full:
            ledger.pin(condition.J, condition.jet_value(backend))
        else:
            scale = backend.from_int(factorial_of(condition.J))
            ledger.pin(condition.J, condition.target(condition.part, backend) * scale, condition.part)
    return ledger


# ---------------------------------------------------------------------------
# Invariante relativo Δ
# ---------------------------------------------------------------------------

LEVI_JETS = {
    (0, 0): (1, 0, 1, 0, 0), (0, 1): (1, 0, 0, 1, 0),
    (1, 0): (0, 1, 1, 0, 0), (1, 1): (0, 1, 0, 1, 0),
}
THIRD_ORDER_JETS = {
    'z1z1zb1': (2, 0, 1, 0, 0), 'z1z1zb2': (2, 0, 0, 1, 0),
    'z1z2zb1': (1, 1, 1, 0, 0), 'z1z2zb2': (1, 1, 0, 1, 0),
    'z2z2zb1': (0, 2, 1, 0, 0), 'z2z2zb2': (0, 2, 0, 1, 0),
}
DELTA_PAIRS = {
    '12': (('z1z2zb1', 'z1z1zb2'), ('z1z2zb2', 'z1z1zb1')),
    '23': (('z1z2zb2', 'z2z2zb1'), ('z1z2zb1', 'z2z2zb2')),
    '13': (('z1z1zb1', 'z2z2zb2'), ('z1z1zb2', 'z2z2zb1')),
}


def _product_rule(products: Sequence[Tuple[int, Jet, Jet]], differential: Callable[[Jet], MCExpr],
                  backend) -> Tuple[LiftedPoly, MCExpr]:
    """Δ = Σ sinal·V_A·V_B e dΔ pela regra do produto"""
    delta = LiftedPoly.zero(backend)
    d_delta = MCExpr.zero(backend)
    for sign, A, B in products:
        a, b = LiftedPoly.jet(A, backend), LiftedPoly.jet(B, backend)
        delta = delta + (a * b).scale(backend.from_int(sign))
        piece = differential(A).times(b) + differential(B).times(a)
        d_delta = d_delta + piece.scale(backend.from_int(sign))
    return delta, d_delta


def levi_scaling_form(backend=None) -> MCExpr:
    """2α_U − μ¹_{Z1} − μ²_{Z2} − μ̄¹_{Z̄1} − μ̄²_{Z̄2}"""
    backend = backend or get_backend('exact')
    one = backend.one
    return MCExpr.of([
        (MCSymbol('alpha', (0, 0, 0, 0, 1, 0)), backend.from_int(2)),
        (MCSymbol('mu1', (1, 0, 0, 0, 0, 0)), -one),
        (MCSymbol('mu2', (0, 1, 0, 0, 0, 0)), -one),
        (MCSymbol('mubar1', (0, 0, 1, 0, 0, 0)), -one),
        (MCSymbol('mubar2', (0, 0, 0, 1, 0, 0)), -one),
    ], backend)


def relative_invariant_check(backend=None) -> Tuple[bool, MCExpr]:
    """dΔ − (2α_U − μ¹_{Z1} − μ²_{Z2} − μ̄¹_{Z̄1} − μ̄²_{Z̄2})Δ, módulo horizontais; deve se anular"""
    backend = backend or get_backend('exact')
    ledger = elementary_ledger(backend)
    products = [(1, LEVI_JETS[(0, 0)], LEVI_JETS[(1, 1)]), (-1, LEVI_JETS[(0, 1)], LEVI_JETS[(1, 0)])]
    delta, d_delta = _product_rule(products, lambda K: recurrence(K, ledger, modulo_horizontal=True), backend)
    difference = d_delta - levi_scaling_form(backend).times(delta)
    return difference.real_form().is_zero(), difference


def delta_relation(pair: str, fiber: JetSeries, ledger: Optional[Ledger] = None) -> Tuple[Any, MCExpr]:
    """(Δ na fibra, dΔ na fibra) para Δ₁₂, Δ₂₃ ou Δ₁₃"""
    backend = fiber.backend
    calculus = FiberCalculus(fiber)
    values = calculus.fiber_values()
    (a1, b1), (a2, b2) = DELTA_PAIRS[pair]
    products = [(1, THIRD_ORDER_JETS[a1], THIRD_ORDER_JETS[b1]), (-1, THIRD_ORDER_JETS[a2], THIRD_ORDER_JETS[b2])]
    delta, d_delta = _product_rule(products, lambda K: fiber_recurrence(K, fiber, ledger, calculus), backend)

    def value_of(K):
        return values.get(K, backend.zero)

    return delta.substitute(value_of).constant_value(), d_delta.substitute_values(value_of)
