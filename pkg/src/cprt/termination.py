"""Termination verdicts and asymptotic runtime bounds.

The decision procedure is purely rational arithmetic: a program with direct
termination (p' > 0) is PAST outright with expected runtime at most 1/p';
otherwise the sign of the drift mu = sum_j j*p_j of the reduced walk decides
everything (mu > 0: not AST, mu = 0: AST but not PAST, mu < 0: PAST).  For
PAST programs without direct termination the runtime is sandwiched between
the affine functions (-1/mu)*x and (-1/mu)*x + (1-k)/mu of x = rdw(state).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import NotPastError
from .program import CpProgram, RandomWalkProgram
from .reduction import is_trivial, to_random_walk

__all__ = [
    "VerdictKind",
    "Reason",
    "TrivialCase",
    "Verdict",
    "RuntimeBounds",
    "drift",
    "decide",
    "bounds",
]


class VerdictKind(enum.Enum):
    TRIVIAL = "trivial"
    NOT_AST = "not_ast"
    AST_NOT_PAST = "ast_not_past"
    PAST = "past"


class Reason(enum.Enum):
    DIRECT_TERMINATION = "direct_termination"
    DRIFT_SIGN = "drift_sign"
    TRIVIALITY = "triviality"


class TrivialCase(enum.Enum):
    """Case split for trivial programs.

    GUARD_NEVER_HOLDS: a = 0 and b >= 0, runtime 0 on every input.
    LOOPS_FOREVER: a = 0 and b < 0, runtime infinite on every input.
    SELF_LOOP: reduced walk is x = x with probability 1; runtime infinite
    whenever the guard holds, 0 otherwise.
    """

    GUARD_NEVER_HOLDS = "guard_never_holds"
    LOOPS_FOREVER = "loops_forever"
    SELF_LOOP = "self_loop"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reason: Reason
    drift: Optional[Fraction] = None
    trivial_case: Optional[TrivialCase] = None


@dataclass(frozen=True)
class RuntimeBounds:
    """Affine bounds slope*x + intercept in x = rdw(state), valid for x > 0."""

    lower_slope: Fraction
    lower_intercept: Fraction
    upper_slope: Fraction
    upper_intercept: Fraction

    def lower_at(self, x: int) -> Fraction:
        return self.lower_slope * x + self.lower_intercept if x > 0 else Fraction(0)

    def upper_at(self, x: int) -> Fraction:
        return self.upper_slope * x + self.upper_intercept if x > 0 else Fraction(0)


def drift(rw: RandomWalkProgram) -> Fraction:
    """Expected one-iteration change of the walk variable, sum_j j*p_j."""
    return sum((Fraction(j) * p for j, p in rw.probs.items()), Fraction(0))


def decide(prog: CpProgram, include_drift: bool = False) -> Verdict:
    """Total, deterministic, float-free verdict for a validated program.

    ``include_drift`` forces the drift to be reported even on the p' > 0
    fast path, where the verdict itself does not need it.
    """
    if is_trivial(prog):
        if all(a == 0 for a in prog.guard_a):
            case = TrivialCase.GUARD_NEVER_HOLDS if prog.guard_b >= 0 else TrivialCase.LOOPS_FOREVER
        else:
            case = TrivialCase.SELF_LOOP
        return Verdict(kind=VerdictKind.TRIVIAL, reason=Reason.TRIVIALITY, trivial_case=case)
    walk, _ = to_random_walk(prog)
    if walk.direct_prob > 0:
        mu = drift(walk) if include_drift else None
        return Verdict(kind=VerdictKind.PAST, reason=Reason.DIRECT_TERMINATION, drift=mu)
    mu = drift(walk)
    if mu > 0:
        kind = VerdictKind.NOT_AST
    elif mu == 0:
        kind = VerdictKind.AST_NOT_PAST
    else:
        kind = VerdictKind.PAST
    return Verdict(kind=kind, reason=Reason.DRIFT_SIGN, drift=mu)


def bounds(prog: CpProgram) -> RuntimeBounds:
    """Exact rational bounds for a PAST program; NotPastError otherwise."""
    verdict = decide(prog)
    if verdict.kind != VerdictKind.PAST:
        raise NotPastError(f"runtime bounds require a PAST program, got {verdict.kind.value}")
    walk, _ = to_random_walk(prog)
    if walk.direct_prob > 0:
        limit = 1 / walk.direct_prob
        return RuntimeBounds(
            lower_slope=Fraction(0),
            lower_intercept=Fraction(0),
            upper_slope=Fraction(0),
            upper_intercept=limit,
        )
    mu = drift(walk)
    slope = -1 / mu
    return RuntimeBounds(
        lower_slope=slope,
        lower_intercept=Fraction(0),
        upper_slope=slope,
        upper_intercept=Fraction(1 - walk.k) / mu,
    )
