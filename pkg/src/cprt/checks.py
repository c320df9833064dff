"""Invariant suite run by ``cprt check`` and the acceptance tests.

Each check exercises a property the closed form must satisfy independently
of how it was computed: the runtime recurrence itself, the boundary zeros,
the retained-root count, the affine bounds envelope, the sign of the add-on
relative to the particular term, and agreement with the Kleene oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .exact import AnalysisResult, evaluate
from .oracles import kleene_converge
from .roots import GUARD_DIGITS, to_mpf

__all__ = ["Check", "CheckReport", "recurrence_residual", "boundary_residual", "run_checks"]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class CheckReport:
    checks: tuple[Check, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def recurrence_residual(result: AnalysisResult, xs) -> mp.mpf:
    """max over xs of |rt(x) - sum_j p_j*rt(x+j) - p'*rt(d) - 1|, rt(y<=0) = 0."""
    cf = result.closed_form
    walk = result.walk
    with mp.workdps(cf.precision + GUARD_DIGITS):
        worst = mp.mpf(0)
        probs = [(j, to_mpf(p)) for j, p in walk.probs.items()]
        direct = to_mpf(walk.direct_prob)
        for x in xs:
            acc = evaluate(cf, x) - 1
            for j, p in probs:
                acc -= p * evaluate(cf, x + j)
            acc -= direct * evaluate(cf, walk.reset_target)
            worst = max(worst, abs(acc))
        return worst


def boundary_residual(result: AnalysisResult) -> mp.mpf:
    """max over x = -k+1..0 of |C(x) + add-on(x)| (must vanish by construction)."""
    cf = result.closed_form
    k = result.walk.k
    with mp.workdps(cf.precision + GUARD_DIGITS):
        worst = mp.mpf(0)
        for x in range(-k + 1, 1):
            total = mp.mpf(cf.particular.at(x, to_real=to_mpf))
            for term in cf.complex_terms:
                lam = term.root
                lam_pow = lam ** x if x >= 0 else 1 / (lam ** (-x))
                xpow = mp.mpf(1) if (x == 0 and term.power == 0) else mp.mpf(x) ** term.power
                total += term.coeff * lam_pow * xpow
            worst = max(worst, abs(total))
        return worst


def run_checks(result: AnalysisResult, *, recurrence_xs=range(1, 101),
               envelope_xs=range(1, 201), kleene_x0: int = 1,
               kleene_increment_tol: float = 1e-6, kleene_value_tol: float = 1e-4,
               kleene_max_n: int = 100_000,
               residual_exponent: float = 0.5) -> CheckReport:
    """Run the full suite against a PAST analysis result."""
    cf = result.closed_form
    if cf is None:
        raise ValueError("checks require a PAST analysis with a closed form")
    precision = cf.precision
    tol = mp.mpf(10) ** (-mp.mpf(precision) * residual_exponent)
    checks: list[Check] = []

    res = recurrence_residual(result, recurrence_xs)
    checks.append(Check(
        name="recurrence_residual",
        passed=res < tol,
        detail=f"max residual {mp.nstr(res, 6)} over x in "
               f"{recurrence_xs.start}..{recurrence_xs.stop - 1} (tolerance {mp.nstr(tol, 3)})",
    ))

    bres = boundary_residual(result)
    checks.append(Check(
        name="boundary_residual",
        passed=bres < tol,
        detail=f"max residual {mp.nstr(bres, 6)} over x in {-result.walk.k + 1}..0",
    ))

    # each retained root contributes one term per multiplicity order, so the
    # term count equals the retained multiplicity sum
    retained = len(cf.complex_terms)
    checks.append(Check(
        name="retained_root_count",
        passed=retained == result.walk.k,
        detail=f"retained multiplicity sum {retained}, k = {result.walk.k}",
    ))

    eval_tol = mp.mpf(10) ** (-mp.mpf(precision) / 2 + 2)
    envelope_ok = True
    envelope_detail = "bounds sandwich rt(x)"
    for x in envelope_xs:
        value = evaluate(cf, x)
        lo = to_mpf(result.bounds.lower_at(x))
        hi = to_mpf(result.bounds.upper_at(x))
        if not (lo - eval_tol <= value <= hi + eval_tol):
            envelope_ok = False
            envelope_detail = (f"rt({x}) = {mp.nstr(value, 10)} outside "
                               f"[{mp.nstr(lo, 10)}, {mp.nstr(hi, 10)}]")
            break
    checks.append(Check(name="bounds_envelope", passed=envelope_ok, detail=envelope_detail))

    # Add-on sign: non-positive when p' > 0, non-negative when p' = 0.
    direct = result.walk.direct_prob > 0
    sign_ok = True
    sign_detail = "add-on " + ("<= 0" if direct else ">= 0") + " for all sampled x"
    for x in envelope_xs:
        addon = evaluate(cf, x) - mp.mpf(cf.particular.at(x, to_real=to_mpf))
        if direct and addon > eval_tol:
            sign_ok, sign_detail = False, f"add-on {mp.nstr(addon, 6)} > 0 at x = {x}"
            break
        if not direct and addon < -eval_tol:
            sign_ok, sign_detail = False, f"add-on {mp.nstr(addon, 6)} < 0 at x = {x}"
            break
    checks.append(Check(name="addon_sign", passed=sign_ok, detail=sign_detail))

    nonneg_ok = all(evaluate(cf, x) >= -eval_tol for x in envelope_xs)
    checks.append(Check(
        name="nonnegativity",
        passed=nonneg_ok,
        detail="rt(x) >= 0 for all sampled x" if nonneg_ok else "rt(x) < 0 somewhere",
    ))

    conv = kleene_converge(result.walk, kleene_x0, increment_tol=kleene_increment_tol,
                           value_tol=kleene_value_tol, max_n=kleene_max_n)
    closed = evaluate(cf, kleene_x0)
    gap = abs(closed - conv.value)
    sandwich_ok = conv.converged and gap < kleene_value_tol and conv.value <= closed + eval_tol
    checks.append(Check(
        name="kleene_sandwich",
        passed=bool(sandwich_ok),
        detail=(f"fixpoint iterate {mp.nstr(mp.mpf(conv.value), 12)} after {conv.iterations} "
                f"rounds vs closed form {mp.nstr(closed, 12)} at x = {kleene_x0} "
                f"(gap {mp.nstr(gap, 4)})"),
    ))

    return CheckReport(checks=tuple(checks))

