"""Exact-arithmetic data model for constant-probability loop programs.

A program is a single while loop over integer variables x with an affine
guard ``a . x > b``.  Each iteration picks exactly one branch: an increment
``x += c`` with constant probability, or (at most once) a reset ``x = d``
to a guard-violating state.  All probabilities are exact rationals
(``fractions.Fraction``), so drift signs and root deflation later in the
pipeline are exact.

The univariate normal form (guard ``x > 0``, bounded integer steps in
``[-k, m]``, optional reset to ``d <= 0``) is modelled separately as
:class:`RandomWalkProgram`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import ValidationError

__all__ = [
    "Branch",
    "Reset",
    "CpProgram",
    "RandomWalkProgram",
    "validate",
    "validate_walk",
    "pretty",
]


@dataclass(frozen=True)
class Branch:
    delta: tuple[int, ...]
    prob: Fraction


@dataclass(frozen=True)
class Reset:
    target: tuple[int, ...]
    prob: Fraction


@dataclass(frozen=True)
class CpProgram:
    """``while (a . x > b) { x += c_j [p_j]; ...; x = d [p']; }``

    Branch order is preserved for reporting; it is semantically irrelevant.
    Instances are immutable after construction and safe to share.
    """

    var_names: tuple[str, ...]
    guard_a: tuple[int, ...]
    guard_b: int
    branches: tuple[Branch, ...]
    reset: Optional[Reset] = None

    @property
    def arity(self) -> int:
        return len(self.var_names)

    def guard_value(self, state: tuple[int, ...]) -> int:
        return sum(a * z for a, z in zip(self.guard_a, state))

    def guard_holds(self, state: tuple[int, ...]) -> bool:
        return self.guard_value(state) > self.guard_b

    def as_random_walk(self) -> Optional["RandomWalkProgram"]:
        """The walk this program literally spells, or None.

        Recognizes univariate programs with guard coefficient 1 and bound 0
        (reset target necessarily <= 0 by validation).
        """
        if self.var_names != (self.var_names[0],) or self.guard_a != (1,) or self.guard_b != 0:
            return None
        offsets = {br.delta[0]: br.prob for br in self.branches}
        pos = [j for j, p in offsets.items() if p > 0]
        m = max([0] + [j for j in pos if j > 0])
        k = max([0] + [-j for j in pos if j < 0])
        probs = {j: offsets.get(j, Fraction(0)) for j in range(-k, m + 1)}
        direct = self.reset.prob if self.reset else Fraction(0)
        target = self.reset.target[0] if self.reset else 0
        return RandomWalkProgram(m=m, k=k, probs=probs, direct_prob=direct, reset_target=target)


@dataclass(frozen=True, eq=True)
class RandomWalkProgram:
    """Univariate normal form: offsets -k..m with probabilities p_j, plus p'.

    ``probs`` holds every offset in ``-k..m`` (aggregated zeros retained);
    ``m > 0`` implies ``p_m > 0`` and ``k > 0`` implies ``p_{-k} > 0``.
    """

    m: int
    k: int
    probs: dict[int, Fraction] = field(compare=True)
    direct_prob: Fraction = Fraction(0)
    reset_target: int = 0

    def prob(self, j: int) -> Fraction:
        return self.probs.get(j, Fraction(0))

    def offsets(self) -> range:
        return range(-self.k, self.m + 1)

    def as_cp_program(self) -> CpProgram:
        """Spell out the walk as a univariate CP program (guard x > 0)."""
        branches = tuple(
            Branch(delta=(j,), prob=self.probs[j]) for j in sorted(self.probs, reverse=True)
        )
        reset = Reset(target=(self.reset_target,), prob=self.direct_prob) if self.direct_prob > 0 else None
        return CpProgram(var_names=("x",), guard_a=(1,), guard_b=0, branches=branches, reset=reset)


def validate(prog: CpProgram) -> None:
    """Check every structural invariant; raise ValidationError naming the first violated one."""
    r = len(prog.var_names)
    if r < 1:
        raise ValidationError("program must declare at least one variable")
    if len(set(prog.var_names)) != r:
        raise ValidationError("variable names must be pairwise distinct")
    if len(prog.guard_a) != r:
        raise ValidationError(f"guard coefficient vector has arity {len(prog.guard_a)}, expected {r}")
    seen = set()
    total = Fraction(0)
    for br in prog.branches:
        if len(br.delta) != r:
            raise ValidationError(f"increment vector {br.delta} has arity {len(br.delta)}, expected {r}")
        if br.prob < 0:
            raise ValidationError(f"negative probability {br.prob}")
        if br.delta in seen:
            raise ValidationError(f"duplicate increment vector {br.delta}")
        seen.add(br.delta)
        total += br.prob
    if prog.reset is not None:
        if len(prog.reset.target) != r:
            raise ValidationError(
                f"reset target {prog.reset.target} has arity {len(prog.reset.target)}, expected {r}"
            )
        if prog.reset.prob <= 0:
            raise ValidationError("reset probability must be positive when a reset is present")
        total += prog.reset.prob
        if prog.guard_value(prog.reset.target) > prog.guard_b:
            raise ValidationError(
                f"reset target violates a.d <= b: a.d = {prog.guard_value(prog.reset.target)}"
                f" > b = {prog.guard_b}"
            )
    if total != 1:
        raise ValidationError(f"probabilities sum to {total}, expected 1")


def validate_walk(rw: RandomWalkProgram) -> None:
    if rw.m < 0 or rw.k < 0:
        raise ValidationError("m and k must be natural numbers")
    if set(rw.probs) != set(range(-rw.k, rw.m + 1)):
        raise ValidationError(f"probability map must cover exactly the offsets {-rw.k}..{rw.m}")
    if any(p < 0 for p in rw.probs.values()) or rw.direct_prob < 0:
        raise ValidationError("negative probability")
    if rw.m > 0 and rw.probs[rw.m] <= 0:
        raise ValidationError(f"m = {rw.m} > 0 requires p_m > 0")
    if rw.k > 0 and rw.probs[-rw.k] <= 0:
        raise ValidationError(f"k = {rw.k} > 0 requires p_-k > 0")
    if rw.reset_target > 0:
        raise ValidationError(f"reset target d = {rw.reset_target} must satisfy d <= 0")
    total = sum(rw.probs.values(), Fraction(0)) + rw.direct_prob
    if total != 1:
        raise ValidationError(f"probabilities sum to {total}, expected 1")


def _format_guard(prog: CpProgram) -> str:
    parts = []
    for i, (coeff, name) in enumerate(zip(prog.guard_a, prog.var_names)):
        if i == 0:
            sign = "-" if coeff < 0 else ""
            parts.append(f"{sign}{abs(coeff)}*{name}")
        else:
            sign = "-" if coeff < 0 else "+"
            parts.append(f"{sign} {abs(coeff)}*{name}")
    return " ".join(parts)


def pretty(prog: CpProgram) -> str:
    """Canonical source form; ``parse(pretty(p)) == p`` for validated programs."""
    lines = ["vars " + ", ".join(prog.var_names)]
    lines.append(f"while {_format_guard(prog)} > {prog.guard_b} {{")
    for br in prog.branches:
        vec = ", ".join(str(c) for c in br.delta)
        lines.append(f"  inc ({vec}) [{br.prob}];")
    if prog.reset is not None:
        vec = ", ".join(str(c) for c in prog.reset.target)
        lines.append(f"  reset ({vec}) [{prog.reset.prob}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
