"""Closed forms for the exact expected runtime.

For a PAST walk the runtime is the unique solution of the recurrence that
vanishes on -k+1..0 and uses only roots inside the closed unit disc:

    rt(x) = C(x) + sum_{|lambda_j| <= 1} sum_{u < v_j} a_{j,u} * lambda_j^x * x^u

with the particular term C(x) = 1/p' (constant, direct termination) or
C(x) = (-1/mu) * x (no direct termination).  The k coefficients a_{j,u} come
from the k boundary equations 0 = rt(x) for x = -k+1..0, a confluent
Vandermonde system solved by partial-pivot elimination at working precision.
Conjugate root pairs are folded into the real representation
w^x * (b*cos(theta*x) + b'*sin(theta*x)) * x^u with b = 2*Re(a),
b' = -2*Im(a).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import mpmath as mp

from .errors import PrecisionError, SingularSystemError
from .program import CpProgram, RandomWalkProgram, validate
from .reduction import RdwMap, to_random_walk
from .roots import (
    GUARD_DIGITS,
    RootSet,
    characteristic_polynomial,
    find_roots,
    filter_unit_disc,
    to_mpf,
)
from .termination import RuntimeBounds, Verdict, VerdictKind, bounds, decide

__all__ = [
    "ParticularKind",
    "Particular",
    "ComplexTerm",
    "RealRootTerm",
    "ConjugatePairTerm",
    "ClosedForm",
    "AnalysisResult",
    "particular_solution",
    "solve_boundary",
    "evaluate",
    "analyze_cp",
    "closed_form_to_dict",
    "pretty_closed_form",
]

DEFAULT_PRECISION = 50


class ParticularKind(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"


@dataclass(frozen=True)
class Particular:
    """C(x): 1/p' if constant, (-1/mu)*x if linear; coeff is exact."""

    kind: ParticularKind
    coeff: Fraction

    def at(self, x, to_real=float):
        c = to_real(self.coeff)
        return c if self.kind is ParticularKind.CONSTANT else c * x


@dataclass(frozen=True)
class ComplexTerm:
    root: mp.mpc
    power: int
    coeff: mp.mpc


@dataclass(frozen=True)
class RealRootTerm:
    root: mp.mpf
    power: int
    coeff: mp.mpf


@dataclass(frozen=True)
class ConjugatePairTerm:
    modulus: mp.mpf
    angle: mp.mpf  # in (0, pi): argument of the upper-half-plane root
    power: int
    cos_coeff: mp.mpf  # b  = 2*Re(a)
    sin_coeff: mp.mpf  # b' = -2*Im(a)


RealTerm = Union[RealRootTerm, ConjugatePairTerm]


@dataclass(frozen=True)
class ClosedForm:
    particular: Particular
    complex_terms: tuple[ComplexTerm, ...]
    real_terms: tuple[RealTerm, ...]
    precision: int


@dataclass(frozen=True)
class AnalysisResult:
    verdict: Verdict
    bounds: Optional[RuntimeBounds]
    closed_form: Optional[ClosedForm]
    rdw: RdwMap
    walk: RandomWalkProgram
    precision: int

    def runtime_at(self, state: tuple[int, ...]) -> mp.mpf:
        """Expected runtime at concrete initial values (0 if the guard fails)."""
        if self.closed_form is None:
            raise ValueError("no closed form available for this verdict")
        return evaluate(self.closed_form, self.rdw.apply(state))


def particular_solution(rw: RandomWalkProgram) -> Particular:
    if rw.direct_prob > 0:
        return Particular(kind=ParticularKind.CONSTANT, coeff=1 / rw.direct_prob)
    mu = sum((Fraction(j) * p for j, p in rw.probs.items()), Fraction(0))
    if mu >= 0:
        raise PrecisionError("particular solution requires p' > 0 or negative drift")
    return Particular(kind=ParticularKind.LINEAR, coeff=-1 / mu)


def _power_term(lam, x: int, u: int):
    """lambda^x * x^u with 0^0 = 1 and negative x via reciprocal powers."""
    if x >= 0:
        lam_pow = lam ** x
    else:
        lam_pow = 1 / (lam ** (-x))
    if u == 0:
        return lam_pow
    return lam_pow * (mp.mpf(x) ** u)


def solve_boundary(
    particular: Particular, filtered: RootSet, k: int, precision: int
) -> ClosedForm:
    """Fix the k coefficients from the boundary equations at x = -k+1..0."""
    if filtered.total_multiplicity() != k:
        raise PrecisionError(
            f"boundary solve needs k = {k} retained roots, got {filtered.total_multiplicity()}"
        )
    with mp.workdps(precision + GUARD_DIGITS):
        columns = [(root, u) for root in filtered.roots for u in range(root.multiplicity)]
        if k == 0:
            return ClosedForm(
                particular=particular, complex_terms=(), real_terms=(), precision=precision
            )
        xs = list(range(-k + 1, 1))
        matrix = mp.matrix(k, k)
        rhs = mp.matrix(k, 1)
        for i, x in enumerate(xs):
            for j, (root, u) in enumerate(columns):
                matrix[i, j] = _power_term(root.value, x, u)
            rhs[i] = -particular.at(x, to_real=to_mpf)
        try:
            solution = mp.lu_solve(matrix, rhs)
        except ZeroDivisionError as exc:
            raise SingularSystemError(
                "boundary system is numerically singular; raise the working precision"
            ) from exc

        res_tol = mp.mpf(10) ** (-mp.mpf(precision) / 2)
        for i, x in enumerate(xs):
            residual = abs(
                sum(matrix[i, j] * solution[j] for j in range(k)) - rhs[i]
            )
            if residual >= res_tol:
                raise PrecisionError(
                    f"boundary residual {mp.nstr(residual, 6)} at x = {x} exceeds tolerance"
                )

        complex_terms = tuple(
            ComplexTerm(root=root.value, power=u, coeff=mp.mpc(solution[j]))
            for j, (root, u) in enumerate(columns)
        )
        real_terms = _to_real_terms(complex_terms, filtered, precision)
        return ClosedForm(
            particular=particular,
            complex_terms=complex_terms,
            real_terms=real_terms,
            precision=precision,
        )


def _to_real_terms(
    complex_terms: tuple[ComplexTerm, ...], filtered: RootSet, precision: int
) -> tuple[RealTerm, ...]:
    pair_tol = mp.mpf(10) ** (-mp.mpf(precision) / 3)
    by_key = {(id(t.root), t.power): t for t in complex_terms}
    terms: list[RealTerm] = []
    handled = set()
    for term in complex_terms:
        key = (id(term.root), term.power)
        if key in handled:
            continue
        if mp.im(term.root) == 0:
            if abs(mp.im(term.coeff)) > pair_tol:
                raise PrecisionError(
                    f"real root {mp.nstr(term.root, 8)} received a non-real coefficient"
                )
            terms.append(
                RealRootTerm(root=mp.re(term.root), power=term.power, coeff=mp.re(term.coeff))
            )
            handled.add(key)
            continue
        if mp.im(term.root) < 0:
            continue  # folded into its upper-half-plane partner below
        partner = None
        for other in complex_terms:
            if other.power == term.power and mp.im(other.root) < 0 and \
                    abs(mp.conj(other.root) - term.root) <= pair_tol:
                partner = other
                break
        if partner is None:
            raise PrecisionError(
                f"no conjugate partner for root {mp.nstr(term.root, 8)}"
            )
        if abs(partner.coeff - mp.conj(term.coeff)) > pair_tol:
            raise PrecisionError(
                f"conjugate roots carry non-conjugate coefficients at {mp.nstr(term.root, 8)}"
            )
        a = (term.coeff + mp.conj(partner.coeff)) / 2
        terms.append(
            ConjugatePairTerm(
                modulus=abs(term.root),
                angle=mp.arg(term.root),
                power=term.power,
                cos_coeff=2 * mp.re(a),
                sin_coeff=-2 * mp.im(a),
            )
        )
        handled.add(key)
        handled.add((id(partner.root), partner.power))
    return tuple(terms)


def evaluate(cf: ClosedForm, rdw_value: int) -> mp.mpf:
    """Expected runtime at x = rdw_value; exactly 0 for guard-violating x <= 0."""
    if rdw_value <= 0:
        return mp.mpf(0)
    with mp.workdps(cf.precision + GUARD_DIGITS):
        x = rdw_value
        total = mp.mpf(cf.particular.at(x, to_real=to_mpf))
        for term in cf.real_terms:
            if isinstance(term, RealRootTerm):
                total += term.coeff * _power_term(term.root, x, term.power)
            else:
                osc = term.cos_coeff * mp.cos(term.angle * x) + term.sin_coeff * mp.sin(term.angle * x)
                total += (term.modulus ** x) * osc * (mp.mpf(x) ** term.power)
        return +total


def analyze_cp(prog: CpProgram, precision: int = DEFAULT_PRECISION,
               timings: Optional[dict] = None) -> AnalysisResult:
    """Full pipeline: reduce, decide, bound, then build the closed form if PAST.

    The closed form is in the reduced variable x; substitute x = rdw(state)
    via the returned map to evaluate at concrete initial values.  When a
    dict is passed as ``timings``, per-stage wall times (ms) are recorded.
    """
    import time

    def clocked(name, fn, *args, **kwargs):
        start = time.perf_counter()
        out = fn(*args, **kwargs)
        if timings is not None:
            timings[name] = (time.perf_counter() - start) * 1000.0
        return out

    clocked("validate", validate, prog)
    walk, rdw = clocked("reduce", to_random_walk, prog)
    verdict = clocked("decide", decide, prog, include_drift=True)
    if verdict.kind != VerdictKind.PAST:
        return AnalysisResult(
            verdict=verdict, bounds=None, closed_form=None, rdw=rdw, walk=walk,
            precision=precision,
        )
    runtime_bounds = clocked("bounds", bounds, prog)
    poly = clocked("char_poly", characteristic_polynomial, walk)
    all_roots = clocked("find_roots", find_roots, poly, precision)
    retained = clocked("filter_roots", filter_unit_disc, all_roots, walk.k)
    particular = particular_solution(walk)
    closed_form = clocked("solve_boundary", solve_boundary, particular, retained, walk.k, precision)
    return AnalysisResult(
        verdict=verdict,
        bounds=runtime_bounds,
        closed_form=closed_form,
        rdw=rdw,
        walk=walk,
        precision=precision,
    )


def _num(value, digits: int) -> str:
    return mp.nstr(value, digits, strip_zeros=True)


def closed_form_to_dict(cf: ClosedForm, rdw: RdwMap) -> dict:
    """JSON-ready dict; numbers serialize as strings at the working precision."""
    digits = cf.precision
    real_terms = []
    for term in cf.real_terms:
        if isinstance(term, RealRootTerm):
            real_terms.append(
                {
                    "kind": "real_root",
                    "root": _num(term.root, digits),
                    "power": term.power,
                    "coeff": _num(term.coeff, digits),
                }
            )
        else:
            real_terms.append(
                {
                    "kind": "conjugate_pair",
                    "modulus": _num(term.modulus, digits),
                    "angle": _num(term.angle, digits),
                    "power": term.power,
                    "cos_coeff": _num(term.cos_coeff, digits),
                    "sin_coeff": _num(term.sin_coeff, digits),
                }
            )
    return {
        "particular": {"kind": cf.particular.kind.value, "coeff": str(cf.particular.coeff)},
        "real_terms": real_terms,
        "rdw": {"a": list(rdw.guard_a), "b": rdw.guard_b},
        "precision_digits": cf.precision,
    }


def pretty_closed_form(cf: ClosedForm, var: str = "x", digits: int = 6) -> str:
    """Human form mirroring the real representation with cos/sin factors."""
    parts = []
    if cf.particular.kind is ParticularKind.CONSTANT:
        parts.append(str(cf.particular.coeff))
    else:
        parts.append(f"{cf.particular.coeff}*{var}")
    for term in cf.real_terms:
        xpow = f"*{var}^{term.power}" if term.power else ""
        if isinstance(term, RealRootTerm):
            parts.append(f"{_num(term.coeff, digits)}*({_num(term.root, digits)})^{var}{xpow}")
        else:
            w = _num(term.modulus, digits)
            th = _num(term.angle, digits)
            b = _num(term.cos_coeff, digits)
            bp = _num(term.sin_coeff, digits)
            parts.append(
                f"{w}^{var}*({b}*cos({th}*{var}) + {bp}*sin({th}*{var})){xpow}"
            )
    joined = " + ".join(parts).replace("+ -", "- ")
    return f"rt({var}) = {joined}   for {var} > 0;   rt({var}) = 0 for {var} <= 0"
