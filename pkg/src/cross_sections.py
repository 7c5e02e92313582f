import threading
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Set, Tuple

import pandas as pd
from pydantic import BaseModel

from errors import ConstraintViolation, ExcludedRHalf
from exact_algebra import Poly, Scalar, conjugate_exponents, factorial_of, get_backend, render_monomial
from hypersurface_jets import JetSeries, index_key, is_pure, weight_of
from linear_action import RowEchelon, representatives, row_parts, weight_action

Jet = Tuple[int, ...]


class BranchTag(str, Enum):
    A2ii1_prime = "A'.ii.1"
    A2ii1_doubleprime = "A''.ii.1"
    A2ii2 = "A.ii.2"
    A2ii3 = "A.ii.3"
    A2ii4 = "A.ii.4"
    A2ii5 = "A.ii.5"
    Excluded_r_half = "Excluded_r_half"
    NotInClass = "NotInClass"

    @classmethod
    def parse(cls, text: str) -> 'BranchTag':
        for tag in cls:
            if text in (tag.value, tag.name):
                return tag
        aliases = {"A'": cls.A2ii1_prime, "A''": cls.A2ii1_doubleprime, "A.ii.1": cls.A2ii1_prime}
        if text in aliases:
            return aliases[text]
        raise ConstraintViolation(f"Ramo desconhecido: {text}")

    @property
    def normalizable(self) -> bool:
        return self not in (BranchTag.Excluded_r_half, BranchTag.NotInClass)


NORMALIZABLE = [tag for tag in BranchTag if tag.normalizable]

RESIDUAL_DIM = {
    BranchTag.A2ii1_prime: 2,
    BranchTag.A2ii1_doubleprime: 3,
    BranchTag.A2ii2: 2,
    BranchTag.A2ii3: 1,
    BranchTag.A2ii4: 1,
    BranchTag.A2ii5: 1,
}


class BranchInvariants(BaseModel):
    """Invariantes fixados pelo ramo (só os campos do ramo são preenchidos)"""
    r: Optional[Any] = None
    lam: Optional[Any] = None
    sigma: Optional[Any] = None
    nu: Optional[Any] = None
    eta: Optional[Any] = None
    low_order: Dict[str, Any] = {}

    class Config:
        arbitrary_types_allowed = True

    def values(self) -> Dict[str, Scalar]:
        names = ('r', 'lam', 'sigma', 'nu', 'eta')
        return {name: getattr(self, name) for name in names if getattr(self, name) is not None}

    def render(self) -> Dict[str, str]:
        out = {('lambda' if k == 'lam' else k): v.render() for k, v in self.values().items()}
        out.update({k: v.render() for k, v in self.low_order.items()})
        return out

    def key(self) -> Tuple:
        return tuple(sorted((k, v.render()) for k, v in self.values().items()))

    def same_as(self, other: 'BranchInvariants') -> bool:
        mine, theirs = self.values(), other.values()
        if set(mine) != set(theirs):
            return False
        return all(mine[k].backend.equal(mine[k].value, theirs[k].to_backend(mine[k].backend).value) for k in mine)


# ---------------------------------------------------------------------------
# Modelos
# ---------------------------------------------------------------------------

Z1Z2ZB1 = (1, 1, 1, 0, 0)
Z1ZB1ZB2 = (1, 0, 1, 1, 0)
Z1Z1ZB2 = (2, 0, 0, 1, 0)
Z2ZB1ZB1 = (0, 1, 2, 0, 0)
Z1Z1ZB1 = (2, 0, 1, 0, 0)
Z1ZB1ZB1 = (1, 0, 2, 0, 0)
Z2Z2ZB1 = (0, 2, 1, 0, 0)
Z1ZB2ZB2 = (1, 0, 0, 2, 0)
Z2Z2ZB2 = (0, 2, 0, 1, 0)
Z2ZB2ZB2 = (0, 1, 0, 2, 0)


def _scalar(x, backend) -> Scalar:
    return Scalar.of(x, backend) if not isinstance(x, Scalar) else x.to_backend(backend)


def check_parameters(tag: BranchTag, inv: BranchInvariants, backend=None):
    """Restrições dos parâmetros do modelo"""
    backend = backend or get_backend('exact')
    if tag == BranchTag.A2ii1_prime:
        if inv.r is None:
            raise ConstraintViolation("O ramo A'.ii.1 exige o parâmetro r")
        r = _scalar(inv.r, backend)
        if not r.is_real() or r.sign() <= 0:
            raise ConstraintViolation("r deve ser real positivo", r=r.render())
        if r == Scalar.of(1, backend):
            raise ConstraintViolation("r = 1 pertence ao ramo A''.ii.1")
        if r == Scalar.rational(1, 2, backend=backend):
            raise ExcludedRHalf("Caso |r| = 1/2 excluído")
    elif tag == BranchTag.A2ii3:
        if inv.lam is None or _scalar(inv.lam, backend).is_zero():
            raise ConstraintViolation("λ deve ser não nulo")
    elif tag == BranchTag.A2ii4:
        if inv.sigma is None or inv.nu is None:
            raise ConstraintViolation("O ramo A.ii.4 exige σ e ν")
        product = _scalar(inv.sigma, backend) * _scalar(inv.nu, backend)
        if product == Scalar.of(1, backend):
            raise ConstraintViolation("σν = 1 não é permitido")
    elif tag == BranchTag.A2ii5:
        if inv.eta is None:
            raise ConstraintViolation("O ramo A.ii.5 exige η")
        if not eta_is_canonical(_scalar(inv.eta, backend)):
            raise ConstraintViolation("η fora do setor canônico arg η ∈ (−π/3, π/3]", eta=inv.eta.render())
    elif not tag.normalizable:
        raise ConstraintViolation(f"Sem modelo para {tag.value}")


def eta_is_canonical(eta: Scalar) -> bool:
    """arg η ∈ (−π/3, π/3] ou η = 0"""
    if eta.is_zero():
        return True
    re, im = eta.real(), eta.imag()
    three_re2 = re * re * 3
    im2 = im * im
    if re.sign() <= 0:
        return False
    if (three_re2 - im2).sign() > 0:
        return True
    return (three_re2 - im2).is_zero() and im.sign() > 0


def model_coefficients(tag: BranchTag, inv: BranchInvariants, backend=None) -> Dict[Jet, Scalar]:
    """Coeficientes (de monômio) da cúbica modelo do ramo"""
    backend = backend or get_backend('exact')
    check_parameters(tag, inv, backend)
    one = Scalar.of(1, backend)
    i = Scalar.rational(0, 1, 1, 1, backend)
    if tag in (BranchTag.A2ii1_prime, BranchTag.A2ii1_doubleprime, BranchTag.A2ii2):
        r = one if tag != BranchTag.A2ii1_prime else _scalar(inv.r, backend)
        data = {Z1Z2ZB1: one, Z1ZB1ZB2: one, Z1Z1ZB2: r, Z2ZB1ZB1: r}
        if tag == BranchTag.A2ii2:
            data[Z1Z1ZB1] = i
            data[Z1ZB1ZB1] = -i
        return data
    if tag == BranchTag.A2ii3:
        lam = _scalar(inv.lam, backend)
        return {Z1Z2ZB1: one, Z1ZB1ZB2: one, Z2Z2ZB1: one, Z1ZB2ZB2: one,
                Z2Z2ZB2: lam, Z2ZB2ZB2: lam.conjugate()}
    if tag == BranchTag.A2ii4:
        sigma, nu = _scalar(inv.sigma, backend), _scalar(inv.nu, backend)
        return {Z1Z1ZB1: one, Z1ZB1ZB1: one, Z2Z2ZB2: one, Z2ZB2ZB2: one,
                Z1Z1ZB2: sigma, Z2ZB1ZB1: sigma.conjugate(), Z2Z2ZB1: nu, Z1ZB2ZB2: nu.conjugate()}
    eta = _scalar(inv.eta, backend)
    return {Z1Z1ZB1: eta, Z1ZB1ZB1: eta.conjugate(), Z1Z1ZB2: one, Z2ZB1ZB1: one,
            Z2Z2ZB1: one, Z1ZB2ZB2: one}


def model_cubic(tag: BranchTag, inv: BranchInvariants, order: int = 6, backend=None) -> Poly:
    backend = backend or get_backend('exact')
    return Poly.from_dict(model_coefficients(tag, inv, backend), order, backend)


def model(tag: BranchTag, inv: BranchInvariants, order: int = 6, backend=None) -> JetSeries:
    """Hipersuperfície modelo do ramo (cúbica, termos superiores nulos)"""
    return JetSeries(model_cubic(tag, inv, order, backend))


def read_invariants(tag: BranchTag, cubic: Poly) -> BranchInvariants:
    """Parâmetros do ramo lidos da cúbica já normalizada"""
    c = cubic.coefficient
    if tag == BranchTag.A2ii1_prime:
        return BranchInvariants(r=c(Z1Z1ZB2))
    if tag == BranchTag.A2ii3:
        return BranchInvariants(lam=c(Z2Z2ZB2))
    if tag == BranchTag.A2ii4:
        return BranchInvariants(sigma=c(Z1Z1ZB2), nu=c(Z2Z2ZB1))
    if tag == BranchTag.A2ii5:
        return BranchInvariants(eta=c(Z1Z1ZB1))
    return BranchInvariants()


def sample_invariants(tag: BranchTag) -> BranchInvariants:
    """Parâmetros de exemplo de cada ramo (r = 3, λ = 1+2i, σ = i, ν = 2, η = 1+i)"""
    samples = {
        BranchTag.A2ii1_prime: {'r': Scalar.of(3)},
        BranchTag.A2ii3: {'lam': Scalar.rational(1, 1, 2)},
        BranchTag.A2ii4: {'sigma': Scalar.rational(0, 1, 1), 'nu': Scalar.of(2)},
        BranchTag.A2ii5: {'eta': Scalar.rational(1, 1, 1)},
    }
    return BranchInvariants(**samples.get(tag, {}))


# ---------------------------------------------------------------------------
# Condições da seção transversal
# ---------------------------------------------------------------------------

ORIGINS = ('pin', 'pure', 'theorem', 'supplementary', 'opportunistic')


class Condition(BaseModel):
    """Condição sobre o coeficiente de z^a z̄^b u^l (parte real, imaginária ou completa)"""
    J: Tuple[int, int, int, int, int]
    part: str
    value: Any
    origin: str
    active: bool = True
    contributes: bool = True

    class Config:
        arbitrary_types_allowed = True

    @property
    def weight(self) -> int:
        return weight_of(self.J)

    @property
    def full(self) -> bool:
        return self.part == 'full'

    def parts(self) -> Tuple[str, ...]:
        return row_parts(self.J) if self.full else (self.part,)

    def target(self, part: str, backend):
        value = self.value.value if isinstance(self.value, Scalar) else self.value
        return backend.real(value) if part == 're' else backend.imag(value)

    def jet_value(self, backend):
        value = self.value.value if isinstance(self.value, Scalar) else self.value
        return value * backend.from_int(factorial_of(self.J))

    def label(self) -> str:
        name = 'V_' + render_monomial(self.J, ('Z1', 'Z2', 'Zb1', 'Zb2', 'U'))
        return name if self.full else f"{self.part.capitalize()} {name}"

    def sort_key(self):
        return (self.weight, ORIGINS.index(self.origin), sum(self.J), tuple(-e for e in self.J), self.part)


def _full():
    return {'re', 'im'}


def _a_prime(J: Jet, inv, backend) -> Set[str]:
    a1, a2, b1, b2, l = J
    nb = b1 + b2
    if a1 >= 1 and a2 >= 1 and nb == 1:
        return _full()
    if a2 == 0 and a1 >= 3 and (b1, b2) == (0, 1):
        return _full()
    if a2 == 0 and a1 >= 2 and (b1, b2) == (1, 0):
        return _full()
    if (a1, a2) == (1, 0) and nb == 1 and l >= 1:
        return _full()
    return _parts_of(J[:4], {(2, 0, 2, 1): 're', (2, 0, 0, 1): 'im', (4, 0, 0, 2): 'im', (3, 0, 1, 2): 'im'})


def _a_double_prime(J: Jet, inv, backend) -> Set[str]:
    a1, a2, b1, b2, l = J
    nb = b1 + b2
    if a1 >= 1 and a2 >= 1 and nb == 1:
        return _full()
    if a2 == 0 and a1 >= 3 and nb == 1:
        return _full()
    if (a1, a2) == (1, 0) and nb == 1 and l >= 1:
        return _full()
    return _parts_of(J[:4], {(2, 0, 1, 0): 're', (2, 0, 2, 1): 're', (2, 0, 0, 1): 'im',
                             (4, 0, 0, 2): 'im', (3, 0, 1, 2): 'im', (2, 1, 3, 0): 'im'})


def _a_ii_2(J: Jet, inv, backend) -> Set[str]:
    a1, a2, b1, b2, l = J
    nb = b1 + b2
    if a1 >= 1 and a2 >= 1 and nb == 1:
        return _full()
    if a2 == 0 and a1 >= 3 and (b1, b2) == (0, 1):
        return _full()
    if a2 == 0 and a1 >= 2 and (b1, b2) == (1, 0):
        return _full()
    if (a1, a2) == (1, 0) and nb == 1 and l >= 1:
        return _full()
    return _parts_of(J[:4], {(2, 0, 0, 1): 'im', (2, 0, 2, 1): 're', (3, 0, 2, 1): 're', (4, 0, 0, 2): 'im'})


def _a_ii_3(J: Jet, inv, backend) -> Set[str]:
    a1, a2, b1, b2, l = J
    nb = b1 + b2
    if a1 >= 1 and a2 >= 1 and (b1, b2) == (1, 0):
        return _full()
    if a2 == 0 and a1 >= 2 and (b1, b2) == (1, 0):
        return _full()
    if (a1, a2) == (1, 1) and b2 >= 1:
        return _full()
    if a2 == 2 and (b1, b2) == (1, 0):
        return _full()
    if (a1, a2) == (1, 0) and nb == 1 and l >= 1:
        return _full()
    return _parts_of(J[:4], {(2, 1, 2, 0): 're', (1, 3, 2, 0): 'im'})


def _a_ii_4(J: Jet, inv, backend) -> Set[str]:
    a1, a2, b1, b2, l = J
    if (a1, a2) == (2, 0) and b1 >= 1:
        return _full()
    if (a1, a2) == (0, 2) and b2 >= 1:
        return _full()
    if a1 == 1 and a2 >= 1 and (b1, b2) == (1, 0):
        return _full()
    if a1 >= 1 and a2 == 1 and (b1, b2) == (0, 1):
        return _full()
    if J[:4] in ((1, 0, 1, 0), (0, 1, 0, 1)) and l >= 1:
        return _full()
    sigma, nu = _scalar(inv.sigma, backend), _scalar(inv.nu, backend)
    product = sigma * nu
    minus_one = product == Scalar.of(-1, backend)
    table: Dict[Tuple[int, ...], str] = {(2, 1, 1, 1): 're'}
    if minus_one:
        table[(3, 0, 1, 1)] = 're'
    else:
        table[(1, 2, 1, 1)] = 're'
    sigma_minus_one = sigma == Scalar.of(-1, backend)
    if not product.imag().is_zero():
        table[(2, 2, 1, 1)] = 're'
    elif not minus_one:
        table[(2, 2, 1, 1)] = 'im'
    elif not sigma_minus_one:
        table[(4, 0, 0, 2)] = 're' if not (nu.conjugate() - sigma * sigma).imag().is_zero() else 'im'
    elif nu == Scalar.of(1, backend):
        table[(0, 4, 2, 0)] = 'im'
    return _parts_of(J[:4], table)


def _a_ii_5(J: Jet, inv, backend) -> Set[str]:
    a1, a2, b1, b2, l = J
    if a1 >= 2 and (b1, b2) == (0, 1):
        return _full()
    if a2 >= 2 and (b1, b2) == (1, 0):
        return _full()
    if a1 >= 1 and a2 == 1 and (b1, b2) == (1, 0):
        return _full()
    if a1 == 1 and a2 >= 1 and (b1, b2) == (0, 1):
        return _full()
    if J[:4] == (1, 0, 0, 1) and l >= 1:
        return _full()
    if J[:4] == (0, 3, 2, 0):
        return _full()
    return _parts_of(J[:4], {(2, 2, 1, 1): 'im'})


def _parts_of(key: Tuple[int, ...], table: Dict[Tuple[int, ...], str]) -> Set[str]:
    part = table.get(tuple(key))
    return {part} if part else set()


PREDICATES: Dict[BranchTag, Callable[[Jet, BranchInvariants, Any], Set[str]]] = {
    BranchTag.A2ii1_prime: _a_prime,
    BranchTag.A2ii1_doubleprime: _a_double_prime,
    BranchTag.A2ii2: _a_ii_2,
    BranchTag.A2ii3: _a_ii_3,
    BranchTag.A2ii4: _a_ii_4,
    BranchTag.A2ii5: _a_ii_5,
}


def theorem_parts(tag: BranchTag, inv: BranchInvariants, J: Jet, backend=None) -> Tuple[str, ...]:
    """Partes de V_J anuladas pela seção transversal do ramo (J e J̄ juntos)"""
    backend = backend or get_backend('exact')
    predicate = PREDICATES[tag]
    parts = predicate(J, inv, backend) | predicate(conjugate_exponents(J), inv, backend)
    allowed = row_parts(J)
    return tuple(p for p in ('re', 'im') if p in parts and p in allowed)


def _condition(J: Jet, parts: Tuple[str, ...], value, origin: str) -> List[Condition]:
    if set(parts) == set(row_parts(J)):
        return [Condition(J=J, part='full', value=value, origin=origin)]
    return [Condition(J=J, part=part, value=value, origin=origin) for part in parts]


def cross_section(tag: BranchTag, inv: BranchInvariants, order: int = 6, backend=None) -> List[Condition]:
    """Condições literais do ramo: pinos cúbicos, termos puros e a lista do teorema"""
    backend = backend or get_backend('exact')
    coefficients = model_coefficients(tag, inv, backend)
    zero = Scalar.of(0, backend)
    out: List[Condition] = []
    for weight in range(1, 3 * order + 1):
        for J in representatives(weight, order):
            if is_pure(J):
                out.extend(_condition(J, row_parts(J), zero, 'pure'))
            elif weight == 3:
                out.extend(_condition(J, row_parts(J), coefficients.get(J, zero), 'pin'))
            elif weight >= 4:
                parts = theorem_parts(tag, inv, J, backend)
                if parts:
                    out.extend(_condition(J, parts, zero, 'theorem'))
    return sorted(out, key=Condition.sort_key)


_COMPLETE_CACHE: Dict[Tuple, List[Condition]] = {}
_COMPLETE_LOCK = threading.Lock()


def complete_cross_section(tag: BranchTag, inv: BranchInvariants, order: int = 6, backend=None) -> List[Condition]:
    """Seção transversal com condições suplementares até o posto da ação em cada peso ≥ 4

    Cada parte (re/im) tem atividade própria: uma condição completa com uma parte dependente é
    separada em duas. Partes dependentes do teorema ficam com active=False e não são impostas;
    o valor delas na forma normal é um invariante da própria seção.
    """
    backend = backend or get_backend('exact')
    key = (tag, inv.key(), order, backend.key)
    with _COMPLETE_LOCK:
        cached = _COMPLETE_CACHE.get(key)
    if cached is not None:
        return [c.copy() for c in cached]
    literal = cross_section(tag, inv, order, backend)
    cubic = model_cubic(tag, inv, order, backend)
    zero = Scalar.of(0, backend)
    by_weight: Dict[int, List[Condition]] = {}
    for condition in literal:
        by_weight.setdefault(condition.weight, []).append(condition)
    out: List[Condition] = []
    for weight in range(1, 3 * order + 1):
        conditions = by_weight.get(weight, [])
        if weight < 4:
            out.extend(conditions)
            continue
        action = weight_action(cubic, weight, order)
        echelon = RowEchelon(backend)
        covered = set()
        for condition in conditions:
            flags = []
            for part in condition.parts():
                covered.add((condition.J, part))
                flags.append(echelon.add(action.row(condition.J, part)))
            if all(flags) or not any(flags):
                condition.active = condition.contributes = all(flags)
                out.append(condition)
                continue
            for part, flag in zip(condition.parts(), flags):
                out.append(Condition(J=condition.J, part=part, value=condition.value,
                                     origin=condition.origin, active=flag))
        keys = [(J, part) for J in representatives(weight, order) for part in row_parts(J)]
        target = action.rank(keys)
        for J, part in keys:
            if echelon.rank >= target:
                break
            if (J, part) in covered:
                continue
            if echelon.add(action.row(J, part)):
                out.append(Condition(J=J, part=part, value=zero, origin='supplementary'))
    out.sort(key=Condition.sort_key)
    with _COMPLETE_LOCK:
        _COMPLETE_CACHE[key] = [c.copy() for c in out]
    return out


def conditions_frame(conditions: List[Condition], series: Optional[JetSeries] = None) -> pd.DataFrame:
    """Tabela das condições (e valores atuais quando a série é dada)"""
    rows = []
    for c in conditions:
        row = {'indice': index_key(c.J), 'condicao': c.label(), 'peso': c.weight, 'origem': c.origin,
               'ativa': c.active, 'alvo': c.value.render() if isinstance(c.value, Scalar) else str(c.value)}
        if series is not None:
            row['valor'] = series.coefficient(c.J).render()
        rows.append(row)
    columns = ['indice', 'condicao', 'peso', 'origem', 'ativa', 'alvo'] + (['valor'] if series is not None else [])
    return pd.DataFrame(rows, columns=columns)


def violations(conditions: List[Condition], series: JetSeries, active_only: bool = False) -> List[Condition]:
    backend = series.backend
    if active_only:
        conditions = [c for c in conditions if c.active]
    bad = []
    for condition in conditions:
        current = series.poly.raw_coefficient(condition.J)
        for part in condition.parts():
            pick = backend.real if part == 're' else backend.imag
            if not backend.equal(pick(current), condition.target(part, backend)):
                bad.append(condition)
                break
    return bad


# ---------------------------------------------------------------------------
# Formas residuais e prioridade de colunas
# ---------------------------------------------------------------------------

def residual_symbols(tag: BranchTag):
    from maurer_cartan import MCSymbol

    re_mu1 = MCSymbol('mu1', (1, 0, 0, 0, 0, 0), 're')
    im_mu2 = MCSymbol('mu2', (1, 0, 0, 0, 0, 0), 'im')
    alpha_u = MCSymbol('alpha', (0, 0, 0, 0, 1, 0))
    table = {
        BranchTag.A2ii1_prime: [re_mu1, alpha_u],
        BranchTag.A2ii1_doubleprime: [re_mu1, im_mu2, alpha_u],
        BranchTag.A2ii2: [im_mu2, alpha_u],
        BranchTag.A2ii3: [alpha_u],
        BranchTag.A2ii4: [alpha_u],
        BranchTag.A2ii5: [alpha_u],
    }
    return table[tag]


def column_priority(tag: BranchTag):
    """Pivôs: maior deslocamento primeiro; depois ordem ≤ 2, formas residuais e ordem alta"""
    residual = set(residual_symbols(tag))

    def key(coord):
        if coord in residual:
            group = 1
        elif coord.order <= 2:
            group = 0
        else:
            group = 2
        return (-coord.shift, group, coord.sort_key())

    return key
