#!/usr/bin/env python3
"""Interface de linha de comando do motor de formas normais"""
import argparse
import json
import os
import sys
from typing import Any, Callable, Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv
from pydantic import BaseModel

from branch_normalizer import classify, extract_invariants, isotropy, normalize
from cross_sections import NORMALIZABLE, RESIDUAL_DIM, BranchInvariants, BranchTag, model, sample_invariants
from equivalence import NO, NON_SCALING_RESIDUAL, equivalent
from errors import EXIT_CODES, CREngineError, ExcludedRHalf, NeedsRadical, UserInputError, exit_code_for
from exact_algebra import Scalar, get_backend
from expression_parser import parse_assignment
from hypersurface_jets import JetSeries, index_key, levi, nondegeneracy, parse_index_key, parse_series
from maurer_cartan import (branch_ledger, elementary_ledger, fiber_recurrence, recurrence, relation_indices,
                           relative_invariant_check, render_lifted)
from transform_engine import apply, random_map

load_dotenv()

VERBS = ('classify', 'normalize', 'levi', 'recurrence', 'isotropy', 'equiv', 'model', 'selftest')
PARAM_NAMES = {'r': 'r', 'lambda': 'lam', 'lam': 'lam', 'sigma': 'sigma', 'nu': 'nu', 'eta': 'eta'}


class Command(BaseModel):
    verb: str
    inputs: List[str] = []
    order: Optional[int] = None
    backend: str = 'exact'
    precision: Optional[int] = None
    opportunistic: bool = False
    output_format: str = 'text'
    params: List[str] = []
    index: Optional[str] = None
    fiber: Optional[str] = None
    tag: Optional[str] = None
    ledger: bool = False

    @property
    def truncation(self) -> int:
        return self.order or int(os.getenv('CR_ORDER', '6'))

    def arithmetic(self):
        return get_backend(self.backend, self.precision)


def read_input(path: str) -> str:
    """Conteúdo de um arquivo de entrada; `-` lê da entrada padrão"""
    if path == '-':
        return sys.stdin.read()
    try:
        with open(path, encoding='utf-8') as handle:
            return handle.read()
    except OSError as e:
        raise UserInputError(f"Não foi possível ler {path}: {e}")


def parse_defining_function(text: str, order: int = 6, backend=None) -> JetSeries:
    return parse_series(text.strip(), order, backend, strict=True)


def _series(cmd: Command, position: int = 0) -> JetSeries:
    if len(cmd.inputs) <= position:
        raise UserInputError(f"O comando {cmd.verb} exige um arquivo de entrada")
    return parse_defining_function(read_input(cmd.inputs[position]), cmd.truncation, cmd.arithmetic())


def _require_order(cmd: Command, minimum: int):
    if cmd.truncation < minimum:
        raise UserInputError(f"O comando {cmd.verb} exige --order ≥ {minimum}")


def _frame_text(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False) if not frame.empty else '(vazio)'


# ---------------------------------------------------------------------------
# Verbos
# ---------------------------------------------------------------------------

def run_classify(cmd: Command) -> Dict[str, Any]:
    _require_order(cmd, 3)
    result = classify(_series(cmd))
    out = result.to_structured()
    lines = [result.tag.value,
             f"Δ12 = {out['delta12']}", f"Δ23 = {out['delta23']}", f"Δ13 = {out['delta13']}"]
    for name, value in out['invariants'].items():
        lines.append(f"{name} = {value}")
    if out['witness']:
        lines.append('aplicação linear:')
        lines.extend('  ' + line for line in out['witness'])
    lines.extend(f"nota: {note}" for note in out['notes'])
    if result.tag == BranchTag.Excluded_r_half:
        out['exit'] = EXIT_CODES[ExcludedRHalf]
    out['text'] = lines
    return out


def run_normalize(cmd: Command) -> Dict[str, Any]:
    _require_order(cmd, 6)
    result = normalize(_series(cmd), cmd.truncation, cmd.opportunistic, cmd.ledger)
    result.invariants = extract_invariants(result)
    out = result.to_structured()
    lines = [result.tag.value]
    lines.extend(f"{name} = {value}" for name, value in out['invariants'].items())
    lines.append(f"dimensão residual ≤ {result.residual_dim_bound}")
    lines.append('forma normal:')
    lines.append(result.normal_form.render())
    lines.append('aplicação:')
    lines.extend('  ' + line for line in out['map'])
    lines.append('seção transversal:')
    lines.append(_frame_text(pd.DataFrame(out['cross_section'])))
    if result.ledger is not None:
        lines.append('ledger:')
        lines.append(_frame_text(result.ledger.trace()))
    lines.extend(f"nota: {note}" for note in out['notes'])
    out['text'] = lines
    return out


def run_levi(cmd: Command) -> Dict[str, Any]:
    _require_order(cmd, 3)
    s = _series(cmd)
    data = levi(s)
    matrix = [[entry.render() for entry in row] for row in data.matrix]
    out: Dict[str, Any] = {'matrix': matrix, 'rank_at_origin': data.rank_at_origin,
                           'vanishes_identically': data.vanishes_identically}
    lines = ['matriz de Levi:']
    lines.extend(f"  L{j + 1}{k + 1} = {matrix[j][k]}" for j in range(2) for k in range(2))
    lines.append(f"posto na origem = {data.rank_at_origin}")
    if data.rank_at_origin == 0:
        report = nondegeneracy(s)
        out.update({'delta12': report.delta12.render(), 'delta23': report.delta23.render(),
                    'delta13': report.delta13.render(), 'two_nondegenerate': report.two_nondegenerate,
                    'span_dimension': report.span_dimension})
        lines.extend([f"Δ12 = {out['delta12']}", f"Δ23 = {out['delta23']}", f"Δ13 = {out['delta13']}",
                      f"dimensão do span = {report.span_dimension}"])
    out['text'] = lines
    return out


def run_recurrence(cmd: Command) -> Dict[str, Any]:
    backend = cmd.arithmetic()
    if cmd.index:
        indices = [parse_index_key(cmd.index)]
    else:
        indices = relation_indices(cmd.order or 2)
    relations = []
    if cmd.fiber:
        if not cmd.tag:
            raise UserInputError("--fiber exige --tag")
        tag = BranchTag.parse(cmd.tag)
        order = max(int(os.getenv('CR_ORDER', '6')), max(sum(J) for J in indices))
        fiber = parse_defining_function(read_input(cmd.fiber), order, backend)
        ledger = branch_ledger(tag, fiber, order)
        for J in indices:
            relations.append((J, '≡', fiber_recurrence(J, fiber, ledger)))
    else:
        for J in indices:
            deep = sum(J) >= 3
            ledger = elementary_ledger(backend) if deep else None
            relations.append((J, '≡' if deep else '=', recurrence(J, ledger, modulo_horizontal=deep, backend=backend)))
    lines = [f"d{render_lifted(J)} {sign} {expr.render()}" for J, sign, expr in relations]
    out = {'relations': [{'index': index_key(J), 'relation': expr.render(), 'terms': expr.to_structured()}
                         for J, _, expr in relations],
           'text': lines}
    return out


def run_isotropy(cmd: Command) -> Dict[str, Any]:
    _require_order(cmd, 3)
    tag = BranchTag.parse(cmd.tag) if cmd.tag else None
    result = isotropy(_series(cmd), cmd.truncation, tag)
    out = result.to_structured()
    lines = [f"ramo: {out['tag'] or '?'}", f"dimensão = {result.dimension}", _frame_text(result.to_frame())]
    lines.extend(f"{name}: {'✅' if ok else '❌'}" for name, ok in result.generators.items())
    out['text'] = lines
    return out


def run_equiv(cmd: Command) -> Dict[str, Any]:
    _require_order(cmd, 6)
    decision = equivalent(_series(cmd, 0), _series(cmd, 1), cmd.truncation)
    out = decision.to_structured()
    lines = [decision.verdict, decision.reason]
    if decision.witness is not None:
        lines.append(f"testemunha ({'verificada' if decision.verified else 'não verificada'}):")
        lines.extend('  ' + line for line in out['witness'])
    if decision.distinguishing:
        lines.append('diferenças: ' + ', '.join(decision.distinguishing))
    out['text'] = lines
    return out


def run_model(cmd: Command) -> Dict[str, Any]:
    name = cmd.tag or (cmd.inputs[0] if cmd.inputs else None)
    if not name:
        raise UserInputError("O comando model exige o nome do ramo")
    tag = BranchTag.parse(name)
    backend = cmd.arithmetic()
    values = {}
    for text in cmd.params:
        key, value = parse_assignment(text, backend)
        if key not in PARAM_NAMES:
            raise UserInputError(f"Parâmetro desconhecido: {key}")
        values[PARAM_NAMES[key]] = value
    series = model(tag, BranchInvariants(**values), cmd.truncation, backend)
    return {'tag': tag.value, 'series': series.render(),
            'coefficients': series.to_frame().to_dict(orient='records'), 'text': [series.render()]}


SELFTEST_PERTURBATION = "z1*zb1*u + z1*z2*zb1*zb2"


def _perturbed_model(tag: BranchTag, order: int, backend=None) -> JetSeries:
    base = model(tag, sample_invariants(tag), order)
    return parse_series(base.render() + " + " + SELFTEST_PERTURBATION, order, backend)


def _scorecard_checks(seed: int) -> List[tuple]:
    checks: List[tuple] = [('invariante relativo Δ', lambda: relative_invariant_check()[0]),
                           ('índices de ordem 2', lambda: len(relation_indices(2)) == 3)]
    for tag in NORMALIZABLE:
        def fixed(tag=tag):
            m = model(tag, sample_invariants(tag), 6)
            return normalize(m, 6).normal_form == m

        def dimension(tag=tag):
            return isotropy(model(tag, sample_invariants(tag), 6), 6).dimension == RESIDUAL_DIM[tag]

        def idempotent(tag=tag):
            first = normalize(_perturbed_model(tag, 6), 6)
            again = normalize(first.normal_form, 6)
            return again.normal_form == first.normal_form and again.map.is_identity()

        def round_trip(tag=tag):
            floating = get_backend('float')
            f = normalize(_perturbed_model(tag, 6, floating), 6).normal_form
            g = random_map(seed, 6, magnitude=1, backend=floating, density=0.2)
            decision = equivalent(f, apply(g, f), 6)
            if tag in NON_SCALING_RESIDUAL:
                return decision.verdict != NO
            return decision.equivalent and decision.verified

        checks.extend([(f"modelo fixo {tag.value}", fixed), (f"isotropia {tag.value}", dimension),
                       (f"idempotência {tag.value}", idempotent), (f"ida e volta {tag.value}", round_trip)])

    def inequivalent():
        a = model(BranchTag.A2ii1_prime, BranchInvariants(r=Scalar.of(3)), 6)
        b = model(BranchTag.A2ii1_prime, BranchInvariants(r=Scalar.of(2)), 6)
        return equivalent(a, b, 6).verdict == NO

    checks.append(("inequivalência r = 3 vs r = 2", inequivalent))
    return checks


def run_selftest(cmd: Command) -> Dict[str, Any]:
    seed = int(os.getenv('CR_SEED', '0'))
    rows = []
    for name, check in _scorecard_checks(seed):
        try:
            ok, detail = bool(check()), ''
        except Exception as e:
            ok, detail = False, str(e)
        rows.append({'verificacao': name, 'ok': ok, 'detalhe': detail})
    frame = pd.DataFrame(rows, columns=['verificacao', 'ok', 'detalhe'])
    failures = frame[~frame['ok']]
    lines = ['🧪 Scorecard', _frame_text(frame)]
    if failures.empty:
        lines.append('🎉 Todas as verificações passaram!')
    else:
        lines.append('🚨 Falhas:')
        lines.extend(f" • {row.verificacao}: {row.detalhe}" for row in failures.itertuples())
    return {'scorecard': frame.to_dict(orient='records'), 'text': lines, 'exit': 0 if failures.empty else 1}


HANDLERS: Dict[str, Callable[[Command], Dict[str, Any]]] = {
    'classify': run_classify,
    'normalize': run_normalize,
    'levi': run_levi,
    'recurrence': run_recurrence,
    'isotropy': run_isotropy,
    'equiv': run_equiv,
    'model': run_model,
    'selftest': run_selftest,
}


# ---------------------------------------------------------------------------
# Entrada
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cr-engine', description='Formas normais de hipersuperfícies 2-não degeneradas')
    parser.add_argument('verb', choices=VERBS)
    parser.add_argument('inputs', nargs='*', help="arquivos de entrada ('-' para stdin)")
    parser.add_argument('--order', type=int, default=None)
    parser.add_argument('--backend', choices=('exact', 'float'), default=os.getenv('CR_BACKEND', 'exact'))
    parser.add_argument('--precision', type=int, default=None)
    parser.add_argument('--opportunistic', action='store_true')
    parser.add_argument('--format', dest='output_format', choices=('text', 'structured'), default='text')
    parser.add_argument('--param', dest='params', action='append', default=[])
    parser.add_argument('--index', default=None)
    parser.add_argument('--fiber', default=None)
    parser.add_argument('--tag', default=None)
    parser.add_argument('--ledger', action='store_true')
    return parser


def run(cmd: Command) -> int:
    """Executa um comando, escreve o relatório e devolve o código de saída"""
    try:
        out = HANDLERS[cmd.verb](cmd)
    except CREngineError as e:
        print(str(e), file=sys.stderr)
        if isinstance(e, NeedsRadical):
            print("💡 Raiz irracional no backend exato: tente novamente com --backend float", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        print(f"❌ Erro ao executar {cmd.verb}: {e}", file=sys.stderr)
        return 1
    code = out.pop('exit', 0)
    lines = out.pop('text')
    if cmd.output_format == 'structured':
        print(json.dumps(out, ensure_ascii=False, indent=2))
    else:
        print('\n'.join(lines))
    if code == EXIT_CODES[ExcludedRHalf]:
        print("⚠️ Caso |r| = 1/2 excluído do normalizador", file=sys.stderr)
    return code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return run(Command(**vars(args)))


if __name__ == '__main__':
    sys.exit(main())
