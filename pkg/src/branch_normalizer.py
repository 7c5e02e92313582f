import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
import sympy
from dotenv import load_dotenv
from pydantic import BaseModel

from cross_sections import (RESIDUAL_DIM, BranchInvariants, BranchTag, Condition, check_parameters,
                            complete_cross_section, conditions_frame, eta_is_canonical, model_cubic,
                            read_invariants, violations)
from errors import (ConstraintViolated, ConstraintViolation, ExcludedRHalf, InternalRankMismatch, NeedsRadical,
                    NotInClass, NotNormalCoordinates, NotTwoNondegenerate)
from exact_algebra import Poly, Scalar, get_backend
from hypersurface_jets import JetSeries, check_normal_coordinates, index_key, jet_coefficient, nondegeneracy
from linear_action import (LinearAction, RowEchelon, Unknown, field_unknowns, read_part, solve_weight,
                           weight_action, weight_keys)
from transform_engine import HoloMapJet, apply, apply_linear, compose, linear_map, transform_cubic

load_dotenv()

Matrix = List[List[Scalar]]


# ---------------------------------------------------------------------------
# Dados da cúbica
# ---------------------------------------------------------------------------

def quadratic_data(cubic: Poly) -> Tuple[List[Scalar], List[Scalar], List[Scalar]]:
    """Coeficientes de z1²z̄k, z1z2z̄k e z2²z̄k (k = 1, 2)"""
    c = cubic.coefficient
    x = [c((2, 0, 1, 0, 0)), c((2, 0, 0, 1, 0))]
    y = [c((1, 1, 1, 0, 0)), c((1, 1, 0, 1, 0))]
    t = [c((0, 2, 1, 0, 0)), c((0, 2, 0, 1, 0))]
    return x, y, t


def pencil_normal(cubic: Poly) -> Tuple[Scalar, Scalar, Scalar]:
    """Produto vetorial dos coeficientes das duas formas quadráticas: Δ12 = −2n3, Δ23 = −2n1, Δ13 = −4n2"""
    x, y, t = quadratic_data(cubic)
    return (y[0] * t[1] - t[0] * y[1], t[0] * x[1] - x[0] * t[1], x[0] * y[1] - y[0] * x[1])


def _as_scalar(x, backend) -> Scalar:
    return x if isinstance(x, Scalar) else Scalar.of(x, backend)


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    return [[a[i][0] * b[0][j] + a[i][1] * b[1][j] for j in range(2)] for i in range(2)]


class LinearFrame:
    """Passos lineares Z = B z, W = c w acumulados sobre a cúbica"""

    def __init__(self, cubic: Poly):
        self.cubic = cubic
        self.backend = cubic.backend
        one, zero = Scalar.of(1, self.backend), Scalar.of(0, self.backend)
        self.matrix: Matrix = [[one, zero], [zero, one]]
        self.c = one
        self.steps: List[str] = []

    def step(self, matrix: Sequence[Sequence[Any]], c: Any = 1, label: str = '') -> 'LinearFrame':
        backend = self.backend
        matrix = [[_as_scalar(x, backend) for x in row] for row in matrix]
        c = _as_scalar(c, backend)
        self.cubic = transform_cubic(self.cubic, matrix, c)
        self.matrix = _matmul(matrix, self.matrix)
        self.c = self.c * c
        if label:
            self.steps.append(label)
        return self

    def swap(self) -> 'LinearFrame':
        return self.step([[0, 1], [1, 0]], 1, 'troca z1 <-> z2')

    def map(self, order: int) -> HoloMapJet:
        return linear_map(self.matrix, self.c, order, self.backend)

    def apply(self, s: JetSeries) -> JetSeries:
        return apply_linear(self.matrix, self.c, s)


def _line_frame(cubic: Poly, normal) -> LinearFrame:
    """Família de discriminante nulo: leva o único quadrado do feixe a z1²"""
    n1, n2, _ = normal
    frame = LinearFrame(cubic)
    if n1.is_zero():
        a, b = Scalar.of(1, cubic.backend), Scalar.of(0, cubic.backend)
    else:
        a, b = -n2, n1
    if not a.is_zero():
        frame.step([[a, b], [0, 1]], 1, 'quadrado do feixe em z1')
    else:
        frame.step([[0, b], [1, 0]], 1, 'quadrado do feixe em z1')
    _, _, t = quadratic_data(frame.cubic)
    if not (t[0].is_zero() and t[1].is_zero()):
        raise InternalRankMismatch("O feixe não ficou em span(z1², z1z2)")
    return frame


def _root_frame(cubic: Poly, normal) -> LinearFrame:
    """Família de discriminante não nulo: os dois quadrados do feixe viram z1² e z2²"""
    n1, n2, n3 = normal
    frame = LinearFrame(cubic)
    if n1.is_zero():
        rows = [[1, 0], [n3, -2 * n2]]
    else:
        root = (n2 * n2 - n1 * n3).sqrt()
        rows = [[(root - n2) / n1, 1], [(-n2 - root) / n1, 1]]
    frame.step(rows, 1, 'quadrados do feixe em z1², z2²')
    _, y, _ = quadratic_data(frame.cubic)
    if not (y[0].is_zero() and y[1].is_zero()):
        raise InternalRankMismatch("O feixe não ficou em span(z1², z2²)")
    return frame


def _line_entries(frame: LinearFrame) -> Tuple[Scalar, Scalar, Scalar, Scalar]:
    """(a11, a21, a12, a22): Q1 = a11 z1² + a21 z1z2, Q2 = a12 z1² + a22 z1z2"""
    x, y, _ = quadratic_data(frame.cubic)
    return x[0], y[0], x[1], y[1]


# ---------------------------------------------------------------------------
# Classificação
# ---------------------------------------------------------------------------

class CubicClassification(BaseModel):
    tag: BranchTag
    family: str
    r_squared: Optional[Any] = None
    notes: List[str] = []

    class Config:
        arbitrary_types_allowed = True

    @property
    def excluded(self) -> bool:
        return self.tag == BranchTag.Excluded_r_half


def classify_cubic(cubic: Poly) -> CubicClassification:
    """Ramo determinado pela parte cúbica (sem raízes irracionais)"""
    normal = pencil_normal(cubic)
    n1, n2, n3 = normal
    if n1.is_zero() and n2.is_zero() and n3.is_zero():
        raise NotTwoNondegenerate("Δ12 = Δ23 = Δ13 = 0 na origem")
    discriminant = n2 * n2 - n1 * n3
    if discriminant.is_zero():
        a11, a21, a12, a22 = _line_entries(_line_frame(cubic, normal))
        if not a22.is_zero():
            e = a12 - a22 * a21.conjugate() / a22.conjugate()
            tag = BranchTag.A2ii3 if not e.is_zero() else BranchTag.NotInClass
            return CubicClassification(tag=tag, family='D')
        r_squared = a12.abs2() / a21.abs2()
        if r_squared == Scalar.rational(1, 4, backend=cubic.backend):
            tag = BranchTag.Excluded_r_half
        elif r_squared == Scalar.of(1, cubic.backend):
            test = a11 * a11 * a12.conjugate() * a21.conjugate()
            tag = BranchTag.A2ii1_doubleprime if test.is_real() and test.sign() >= 0 else BranchTag.A2ii2
        else:
            tag = BranchTag.A2ii1_prime
        return CubicClassification(tag=tag, family='D', r_squared=r_squared)
    notes = []
    try:
        frame = _root_frame(cubic, normal)
    except NeedsRadical as e:
        notes.append(f"raízes do feixe em ponto flutuante ({e})")
        floating = cubic.to_backend(get_backend('float'))
        frame = _root_frame(floating, pencil_normal(floating))
    x, _, t = quadratic_data(frame.cubic)
    tag = BranchTag.A2ii4 if not (x[0] * t[1]).is_zero() else BranchTag.A2ii5
    return CubicClassification(tag=tag, family='S', notes=notes)


class StageZero(BaseModel):
    tag: BranchTag
    frame: Any
    invariants: BranchInvariants

    class Config:
        arbitrary_types_allowed = True


def _sort_key(z: Scalar):
    return (z.abs2(), z.real(), z.imag())


def _precedes(a: Scalar, b: Scalar) -> bool:
    for x, y in zip(_sort_key(a), _sort_key(b)):
        if x == y:
            continue
        return x.backend.less_than(x.value, y.value)
    return False


def _cube_roots_of_unity(backend) -> List[Scalar]:
    one = Scalar.of(1, backend)
    if backend.exact:
        return [one]
    omega = Scalar.rational(-1, 2, backend=backend) + Scalar(backend.i, backend) * Scalar.of(3, backend).sqrt() / 2
    return [one, omega, omega * omega]


def stage_zero(cubic: Poly, classification: Optional[CubicClassification] = None) -> StageZero:
    """Aplicação linear que leva a cúbica exatamente ao modelo do ramo"""
    backend = cubic.backend
    classification = classification or classify_cubic(cubic)
    tag = classification.tag
    if tag == BranchTag.Excluded_r_half:
        raise ExcludedRHalf("Caso |r| = 1/2 excluído")
    if tag == BranchTag.NotInClass:
        raise NotInClass("A cúbica não pertence a nenhum ramo tratado")
    normal = pencil_normal(cubic)
    one = Scalar.of(1, backend)
    if classification.family == 'D':
        frame = _line_frame(cubic, normal)
        a11, a21, a12, a22 = _line_entries(frame)
        if tag == BranchTag.A2ii3:
            e = a12 - a22 * a21.conjugate() / a22.conjugate()
            p11, p21, p22 = a22.conjugate(), -a21.conjugate(), e * a22.conjugate() / a22
            inverse = [[one / p11, 0], [-p21 / (p11 * p22), one / p22]]
            frame.step(inverse, one / (e.abs2() * a22.abs2()), 'escala do ramo A.ii.3')
            frame.swap()
        else:
            r = (a12.abs2() / a21.abs2()).sqrt()
            rho = a12 / a21.conjugate()
            omega = (rho.conjugate() / r).sqrt()
            frame.step([[one / omega, 0], [0, a21]], 1, 'z1z2z̄1 = 1 e z1²z̄2 = r')
            alpha = _line_entries(frame)[0]
            if r == one:
                q = -alpha.real() / 2
            else:
                q = (r * alpha.conjugate() - alpha) / (one - r * r)
            frame.step([[1, 0], [-q, 1]], 1, 'z1²z̄1')
            if tag == BranchTag.A2ii2:
                t = _line_entries(frame)[0].imag()
                frame.step([[1, 0], [0, one / t]], one / t, 'z1²z̄1 = i')
    else:
        frame = _root_frame(cubic, normal)
        x, _, t = quadratic_data(frame.cubic)
        if tag == BranchTag.A2ii4:
            d1 = x[0].conjugate() / (x[0].abs2() ** 2).cbrt()
            d2 = t[1].conjugate() / (t[1].abs2() ** 2).cbrt()
            frame.step([[one / d1, 0], [0, one / d2]], 1, 'z1²z̄1 = z2²z̄2 = 1')
            x, _, t = quadratic_data(frame.cubic)
            if _precedes(t[0], x[1]):
                frame.swap()
        else:
            if not t[1].is_zero():
                frame.swap()
                x, _, t = quadratic_data(frame.cubic)
            base = Scalar(backend.cbrt((t[0].conjugate() / (x[1] * x[1])).value), backend)
            chosen = None
            for root in _cube_roots_of_unity(backend):
                big_x = base * root
                if eta_is_canonical(big_x.abs2() * big_x * x[0]):
                    chosen = big_x
                    break
            if chosen is None:
                raise NeedsRadical("η fora do setor canônico exige raízes cúbicas da unidade")
            big_y = one / (chosen.conjugate() ** 2 * x[1].conjugate())
            frame.step([[one / chosen, 0], [0, one / big_y]], 1, 'z1²z̄2 = z2²z̄1 = 1')
    invariants = read_invariants(tag, frame.cubic)
    if frame.cubic != model_cubic(tag, invariants, cubic.order, backend):
        raise InternalRankMismatch("A etapa linear não produziu a cúbica modelo", tag=tag.value)
    if cubic == frame.cubic:
        # cúbica já é o modelo: o passo acumulado seria uma isotropia
        frame = LinearFrame(cubic)
    return StageZero(tag=tag, frame=frame, invariants=invariants)


class ClassificationResult(BaseModel):
    tag: BranchTag
    delta12: Any
    delta23: Any
    delta13: Any
    witness: Optional[HoloMapJet] = None
    invariants: Optional[BranchInvariants] = None
    notes: List[str] = []

    class Config:
        arbitrary_types_allowed = True

    def to_structured(self) -> Dict[str, Any]:
        return {
            'tag': self.tag.value,
            'delta12': self.delta12.render(), 'delta23': self.delta23.render(), 'delta13': self.delta13.render(),
            'invariants': self.invariants.render() if self.invariants else {},
            'witness': self.witness.render() if self.witness else None,
            'notes': list(self.notes),
        }


def _require_admissible(s: JetSeries):
    if not check_normal_coordinates(s, max_weight=3):
        raise NotNormalCoordinates("Termos puros de peso ≤ 3 na função definidora")
    report = nondegeneracy(s)
    if not report.two_nondegenerate:
        raise NotTwoNondegenerate("Δ12 = Δ23 = Δ13 = 0 na origem")
    return report


def classify(s: JetSeries) -> ClassificationResult:
    """Ramo do ponto e aplicação linear provisória que leva a cúbica ao modelo"""
    report = _require_admissible(s)
    classification = classify_cubic(s.cubic())
    notes = list(classification.notes)
    witness, invariants = None, None
    if classification.tag.normalizable:
        try:
            stage = stage_zero(s.cubic(), classification)
            witness, invariants = stage.frame.map(s.order), stage.invariants
        except NeedsRadical as e:
            notes.append(str(e))
    return ClassificationResult(tag=classification.tag, delta12=report.delta12, delta23=report.delta23,
                                delta13=report.delta13, witness=witness, invariants=invariants, notes=notes)


# ---------------------------------------------------------------------------
# Forma normal
# ---------------------------------------------------------------------------

OPPORTUNISTIC_TARGETS = {
    BranchTag.A2ii1_prime: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii1_doubleprime: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii2: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii3: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii4: [(1, 0, 0, 1, 1)],
    BranchTag.A2ii5: [(1, 0, 1, 0, 1), (0, 1, 0, 1, 1)],
}

LOW_ORDER_REPORT = {
    BranchTag.A2ii1_prime: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii1_doubleprime: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii2: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii3: [(0, 1, 0, 1, 1)],
    BranchTag.A2ii4: [(1, 0, 0, 1, 1), (0, 1, 1, 0, 1)],
    BranchTag.A2ii5: [(1, 0, 1, 0, 1), (0, 1, 0, 1, 1)],
}


class NormalFormResult(BaseModel):
    tag: BranchTag
    normal_form: JetSeries
    map: HoloMapJet
    invariants: BranchInvariants
    ledger: Optional[Any] = None
    residual_dim_bound: int
    conditions: List[Condition]
    notes: List[str] = []

    class Config:
        arbitrary_types_allowed = True

    def to_structured(self) -> Dict[str, Any]:
        coefficients = {index_key(exps): c.render() for exps, c in self.normal_form.items()}
        out = {
            'tag': self.tag.value,
            'invariants': self.invariants.render(),
            'residual_dim_bound': self.residual_dim_bound,
            'normal_form': dict(sorted(coefficients.items())),
            'map': self.map.render(),
            'cross_section': normal_form_report(self).to_dict(orient='records'),
            'notes': list(self.notes),
        }
        if self.ledger is not None:
            out['ledger'] = self.ledger.trace().to_dict(orient='records')
        return out


def scaling_kernel(cubic: Poly) -> List[Tuple[int, int, int]]:
    """Escalas Z_j = t^{p_j} z_j, W = t^{p3} w que fixam a cúbica (vetores inteiros)"""
    rows = []
    for (a1, a2, b1, b2, _), _ in cubic.items():
        rows.append([-(a1 + b1), -(a2 + b2), 1])
    kernel = []
    for vector in sympy.Matrix(rows).nullspace():
        denominator = sympy.ilcm(*[sympy.fraction(x)[1] for x in vector])
        kernel.append(tuple(int(x * denominator) for x in vector))
    return kernel


def scaling_exponent(p: Sequence[int], J: Sequence[int]) -> int:
    a1, a2, b1, b2, l = J
    return p[2] * (1 - l) - p[0] * (a1 + b1) - p[1] * (a2 + b2)


class BranchNormalizer:
    """Construção da forma normal completa peso a peso"""

    def __init__(self, order: Optional[int] = None, opportunistic: bool = False, with_ledger: bool = False):
        self.order = order or int(os.getenv('CR_ORDER', '6'))
        self.opportunistic = opportunistic
        self.with_ledger = with_ledger
        self.verbose = os.getenv('CR_VERBOSE', '0') == '1'

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def normalize(self, s: JetSeries) -> NormalFormResult:
        order = min(self.order, s.order)
        series = s.with_order(order)
        backend = series.backend
        _require_admissible(series)
        stage = stage_zero(series.cubic())
        tag, invariants = stage.tag, stage.invariants
        self._log(f"🔍 Ramo {tag.value}: {invariants.render()}")
        current = stage.frame.apply(series)
        witness = stage.frame.map(order)
        conditions = complete_cross_section(tag, invariants, order, backend)
        early = [c for c in conditions if c.weight <= 3]
        if violations(early, current):
            raise InternalRankMismatch("Condições de peso ≤ 3 violadas após a etapa linear")
        cubic = model_cubic(tag, invariants, order, backend)
        for weight in range(4, 3 * order + 1):
            stage_conditions = [c for c in conditions if c.weight == weight and c.active]
            if stage_conditions:
                current, witness = self._solve_weight(cubic, weight, order, stage_conditions, current, witness)
        notes: List[str] = []
        free = [c.label() for c in violations([c for c in conditions if not c.active], current)]
        if free:
            notes.append("condições dependentes não impostas (valores invariantes): " + ', '.join(free))
        residual = RESIDUAL_DIM[tag]
        if self.opportunistic:
            current, witness, pinned, note = self._pin(tag, current, witness)
            if pinned is not None:
                conditions = conditions + [pinned]
                residual -= 1
            if note:
                notes.append(note)
        result = NormalFormResult(tag=tag, normal_form=current, map=witness, invariants=invariants,
                                  residual_dim_bound=residual, conditions=conditions, notes=notes)
        result.invariants = extract_invariants(result)
        if self.with_ledger:
            from maurer_cartan import branch_ledger

            result.ledger = branch_ledger(tag, current, order, invariants=invariants)
        self._log(f"✅ Forma normal {tag.value} até a ordem {order}")
        return result

    def _solve_weight(self, cubic: Poly, weight: int, order: int, stage_conditions: List[Condition],
                      current: JetSeries, witness: HoloMapJet):
        """Resolve as condições ativas de um peso, repetindo sobre o resíduo até zerá-lo"""
        backend = current.backend
        action = weight_action(cubic, weight, order)
        keys = [(c.J, part) for c in stage_conditions for part in c.parts()]
        targets = [c.target(part, backend) for c in stage_conditions for part in c.parts()]
        previous = None
        for _ in range(order + 3):
            bad = violations(stage_conditions, current)
            if not bad:
                return current, witness
            if previous is not None and len(bad) >= previous:
                break
            previous = len(bad)
            deltas = [t - read_part(current, J, part) for (J, part), t in zip(keys, targets)]
            step = solve_weight(action, keys, deltas)
            if step is None:
                break
            current = apply(step, current)
            witness = compose(step, witness)
            self._log(f"🔧 Peso {weight}: {len(keys)} condições")
        bad = violations(stage_conditions, current)
        if bad:
            raise InternalRankMismatch(f"Peso {weight}: condições não satisfeitas",
                                       conditions=[c.label() for c in bad])
        return current, witness

    def _pin(self, tag: BranchTag, current: JetSeries, witness: HoloMapJet):
        """Escala residual que fixa um coeficiente real não nulo em ±1"""
        backend = current.backend
        kernel = scaling_kernel(current.cubic())
        for J in OPPORTUNISTIC_TARGETS[tag]:
            value = read_part(current, J, 're')
            if backend.is_zero(value):
                continue
            p = next((p for p in kernel if scaling_exponent(p, J) != 0), None)
            if p is None:
                continue
            e = scaling_exponent(p, J)
            sign = backend.real_sign(value)
            magnitude = value * backend.from_int(sign)
            try:
                if e > 0:
                    t = backend.nth_root_real(backend.div(backend.one, magnitude), e)
                else:
                    t = backend.nth_root_real(magnitude, -e)
            except NeedsRadical as err:
                return current, witness, None, f"pino {index_key(J)} ignorado: {err}"
            t = Scalar(t, backend)
            if t != 1:
                matrix = [[t ** p[0], 0], [0, t ** p[1]]]
                current = apply_linear(matrix, t ** p[2], current)
                witness = compose(linear_map(matrix, t ** p[2], witness.order, backend), witness)
            pinned = Condition(J=J, part='re', value=Scalar.of(sign, backend), origin='opportunistic')
            return current, witness, pinned, f"pino {index_key(J)} = {sign}"
        return current, witness, None, ''


def normalize(s: JetSeries, order: Optional[int] = None, opportunistic: bool = False,
              with_ledger: bool = False) -> NormalFormResult:
    return BranchNormalizer(order or s.order, opportunistic, with_ledger).normalize(s)


def extract_invariants(result: NormalFormResult) -> BranchInvariants:
    """Parâmetros do ramo e coeficientes livres de baixa ordem lidos da forma normal"""
    tag = result.tag
    series = result.normal_form
    invariants = read_invariants(tag, series.cubic())
    try:
        check_parameters(tag, invariants, series.backend)
    except (ConstraintViolation, ExcludedRHalf) as e:
        raise ConstraintViolated(f"Invariantes fora das restrições do ramo: {e}")
    low_order = {}
    for J in LOW_ORDER_REPORT[tag]:
        low_order['V_' + index_key(J)] = jet_coefficient(series, J)
    if tag == BranchTag.A2ii4:
        low_order['gamma_invariant'] = jet_coefficient(series, (0, 1, 1, 0, 1)).imag()
    invariants.low_order = low_order
    return invariants


def normal_form_report(result: NormalFormResult) -> pd.DataFrame:
    return conditions_frame(result.conditions, result.normal_form)


# ---------------------------------------------------------------------------
# Isotropia
# ---------------------------------------------------------------------------

def _generator(entries: Dict[Tuple[str, Tuple[int, int, int], str], int]) -> Dict[Unknown, int]:
    return {Unknown(*key): value for key, value in entries.items()}


GENERATORS = {
    'D1': _generator({('f1', (1, 0, 0), 're'): 1, ('f2', (0, 1, 0), 're'): -2}),
    'D2': _generator({('g', (0, 0, 1), 're'): 1, ('f2', (0, 1, 0), 're'): 1}),
    'D3': _generator({('f1', (1, 0, 0), 're'): 1, ('f2', (0, 1, 0), 're'): 1, ('g', (0, 0, 1), 're'): 3}),
    'X': _generator({('f2', (1, 0, 0), 'im'): 1}),
}

BRANCH_GENERATORS = {
    BranchTag.A2ii1_prime: ['D1', 'D2'],
    BranchTag.A2ii1_doubleprime: ['D1', 'D2', 'X'],
    BranchTag.A2ii2: ['D3', 'X'],
    BranchTag.A2ii3: ['D3'],
    BranchTag.A2ii4: ['D3'],
    BranchTag.A2ii5: ['D3'],
}


class IsotropyResult(BaseModel):
    dimension: int
    basis: List[Tuple[Poly, Poly, Poly]]
    generators: Dict[str, bool] = {}
    tag: Optional[BranchTag] = None

    class Config:
        arbitrary_types_allowed = True

    def to_frame(self) -> pd.DataFrame:
        rows = [{'campo': k, 'f1': f1.render(), 'f2': f2.render(), 'g': g.render()}
                for k, (f1, f2, g) in enumerate(self.basis)]
        return pd.DataFrame(rows, columns=['campo', 'f1', 'f2', 'g'])

    def to_structured(self) -> Dict[str, Any]:
        return {'tag': self.tag.value if self.tag else None, 'dimension': self.dimension,
                'basis': self.to_frame().to_dict(orient='records'), 'generators': dict(self.generators)}


def isotropy(s: JetSeries, order: Optional[int] = None, tag: Optional[BranchTag] = None) -> IsotropyResult:
    """Campos holomorfos polinomiais tangentes à hipersuperfície (pesos até a ordem)"""
    order = min(order or s.order, s.order)
    series = s.with_order(order)
    backend = series.backend
    unknowns = field_unknowns(range(1, order - 1), range(1, order + 1), order)
    action = LinearAction(series, unknowns)
    keys = [key for weight in range(1, order + 1) for key in weight_keys(weight, order)]
    basis = action.nullspace(keys)
    echelon = RowEchelon(backend)
    for vector in basis:
        echelon.add(vector)
    if tag is None:
        try:
            tag = classify_cubic(series.cubic()).tag
        except NotTwoNondegenerate:
            tag = None
    generators = {}
    for name in BRANCH_GENERATORS.get(tag, []):
        entries = GENERATORS[name]
        vector = [backend.from_int(entries.get(x, 0)) for x in action.unknowns]
        generators[name] = echelon.contains(vector)
    return IsotropyResult(dimension=len(basis), basis=[action.field(v) for v in basis],
                          generators=generators, tag=tag)
