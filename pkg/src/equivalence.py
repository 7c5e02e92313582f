import itertools
import os
from typing import Any, Dict, List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel

from branch_normalizer import NormalFormResult, normalize, scaling_exponent, scaling_kernel
from cross_sections import BranchTag
from errors import AlgebraError
from exact_algebra import get_backend
from hypersurface_jets import JetSeries, index_key
from transform_engine import HoloMapJet, apply, compose, invert, linear_map

load_dotenv()

YES, NO, UNDETERMINED = 'Yes', 'No', 'UndeterminedResidual'

# ramos cujo grupo residual não é só de escalas
NON_SCALING_RESIDUAL = {BranchTag.A2ii1_doubleprime, BranchTag.A2ii2}


class EquivalenceDecision(BaseModel):
    verdict: str
    reason: str = ''
    witness: Optional[HoloMapJet] = None
    verified: bool = False
    distinguishing: List[str] = []

    class Config:
        arbitrary_types_allowed = True

    @property
    def equivalent(self) -> bool:
        return self.verdict == YES

    def to_structured(self) -> Dict[str, Any]:
        return {'verdict': self.verdict, 'reason': self.reason, 'verified': self.verified,
                'witness': self.witness.render() if self.witness else None,
                'distinguishing': list(self.distinguishing)}


def _differences(a: JetSeries, b: JetSeries) -> List[Tuple[int, ...]]:
    exps = set(e for e, _ in a.items()) | set(e for e, _ in b.items())
    return sorted(e for e in exps if a.coefficient(e) != b.coefficient(e))


def _verify(witness: HoloMapJet, a: JetSeries, b: JetSeries) -> bool:
    try:
        return apply(witness, a) == b.with_order(witness.order)
    except AlgebraError:
        return False


class EquivalenceChecker:
    """Decide a equivalência comparando formas normais e o grupo residual de escalas"""

    def __init__(self, order: Optional[int] = None):
        self.order = order or int(os.getenv('CR_ORDER', '6'))
        self.verbose = os.getenv('CR_VERBOSE', '0') == '1'

    def decide(self, a: JetSeries, b: JetSeries) -> EquivalenceDecision:
        order = min(self.order, a.order, b.order)
        ra, rb = normalize(a, order), normalize(b, order)
        if ra.tag != rb.tag:
            return EquivalenceDecision(verdict=NO, reason=f"ramos diferentes: {ra.tag.value} vs {rb.tag.value}",
                                       distinguishing=['tag'])
        if not ra.invariants.same_as(rb.invariants):
            mine, theirs = ra.invariants.values(), rb.invariants.values()
            names = [k for k, v in mine.items()
                     if k not in theirs or not v.backend.equal(v.value, theirs[k].to_backend(v.backend).value)]
            return EquivalenceDecision(verdict=NO, reason="invariantes do ramo diferentes", distinguishing=names)
        if ra.normal_form == rb.normal_form:
            witness = compose(invert(rb.map), ra.map)
            return EquivalenceDecision(verdict=YES, reason="mesma forma normal", witness=witness,
                                       verified=_verify(witness, a.with_order(order), b.with_order(order)))
        scaling = self._match_scaling(ra, rb)
        if scaling is not None:
            backend = scaling.backend
            witness = compose(invert(rb.map.to_backend(backend)), compose(scaling, ra.map.to_backend(backend)))
            verified = _verify(witness, a.to_backend(backend).with_order(order), b.to_backend(backend).with_order(order))
            return EquivalenceDecision(verdict=YES, reason="formas normais ligadas por escala residual",
                                       witness=witness, verified=verified)
        differing = [index_key(e) for e in _differences(ra.normal_form, rb.normal_form)]
        # "No" só com ramo ou invariante fixado diferente
        if ra.tag in NON_SCALING_RESIDUAL:
            reason = "grupo residual com rotação não testada"
        else:
            reason = "nenhuma escala residual encontrada ligando as formas normais"
        return EquivalenceDecision(verdict=UNDETERMINED, reason=reason, distinguishing=differing)

    def _match_scaling(self, ra: NormalFormResult, rb: NormalFormResult) -> Optional[HoloMapJet]:
        """Escala t_k = ε_k·exp(s_k) na direção do núcleo que leva uma forma normal à outra"""
        source, target = ra.normal_form, rb.normal_form
        backend = get_backend('float') if source.backend.exact else source.backend
        fa, fb = source.to_backend(backend), target.to_backend(backend)
        kernel = scaling_kernel(source.cubic())
        exps = _differences(fa, fb)
        if not kernel or not exps:
            return None
        ctx = backend.ctx
        for signs in itertools.product((1, -1), repeat=len(kernel)):
            rows, rhs = [], []
            for J in exps:
                ca, cb = fa.poly.raw_coefficient(J), fb.poly.raw_coefficient(J)
                if backend.is_zero(ca) or backend.is_zero(cb):
                    break
                exponents = [scaling_exponent(p, J) for p in kernel]
                sign = 1
                for eps, e in zip(signs, exponents):
                    sign *= eps ** (e % 2)
                ratio = cb / (ca * sign)
                if not backend.is_real(ratio) or ratio.real <= 0:
                    break
                rows.append([ctx.mpf(e) for e in exponents])
                rhs.append(ctx.log(ratio.real))
            else:
                candidate = self._scaling_from_logs(rows, rhs, signs, kernel, source.order, backend)
                if candidate is not None and apply(candidate, fa) == fb:
                    return candidate
        return None

    @staticmethod
    def _scaling_from_logs(rows, rhs, signs, kernel, order: int, backend) -> Optional[HoloMapJet]:
        ctx = backend.ctx
        try:
            solution = ctx.lu_solve(ctx.matrix(rows), ctx.matrix(rhs))
        except (ZeroDivisionError, ValueError):
            return None
        t = [eps * ctx.exp(solution[k]) for k, eps in enumerate(signs)]
        powers = [ctx.mpf(1)] * 3
        for tk, p in zip(t, kernel):
            for i in range(3):
                powers[i] *= tk ** p[i]
        matrix = [[ctx.mpc(powers[0]), backend.zero], [backend.zero, ctx.mpc(powers[1])]]
        return linear_map(matrix, ctx.mpc(powers[2]), order, backend)


def equivalent(a: JetSeries, b: JetSeries, order: Optional[int] = None) -> EquivalenceDecision:
    return EquivalenceChecker(order).decide(a, b)
