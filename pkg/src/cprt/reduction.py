"""Reduction of multivariate programs to their univariate random walk form.

The affine map ``rdw(z) = a . z - b`` collapses the state space: the guard
``a . x > b`` becomes ``x > 0`` and an increment ``c`` becomes the integer
offset ``a . c``.  The termination time of the original program started at
``z`` and of the reduced walk started at ``rdw(z)`` are identically
distributed, so verdicts, bounds, and the exact runtime all transfer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .program import CpProgram, RandomWalkProgram

__all__ = ["RdwMap", "to_random_walk", "is_trivial"]


@dataclass(frozen=True)
class RdwMap:
    """z |-> a . z - b, evaluated in exact integer arithmetic."""

    guard_a: tuple[int, ...]
    guard_b: int

    def apply(self, state: tuple[int, ...]) -> int:
        if len(state) != len(self.guard_a):
            raise ValueError(f"state arity {len(state)} != {len(self.guard_a)}")
        return sum(a * z for a, z in zip(self.guard_a, state)) - self.guard_b

    def expression(self, var_names: tuple[str, ...]) -> str:
        parts = []
        for coeff, name in zip(self.guard_a, var_names):
            if coeff == 0:
                continue
            sign = "-" if coeff < 0 else ("+" if parts else "")
            mag = abs(coeff)
            parts.append(f"{sign} {mag}*{name}" if parts else f"{sign}{mag}*{name}")
        if not parts:
            parts.append("0")
        b = self.guard_b
        if b > 0:
            parts.append(f"- {b}")
        elif b < 0:
            parts.append(f"+ {-b}")
        return " ".join(parts)


def to_random_walk(prog: CpProgram) -> tuple[RandomWalkProgram, RdwMap]:
    """Aggregate branches by their guard-space offset a . c.

    m and k are minimal naturals covering every offset that carries positive
    probability (a zero-probability branch cannot widen the step range);
    offsets with aggregated probability 0 strictly inside [-k, m] are kept
    explicitly with probability 0.
    """
    rdw = RdwMap(guard_a=prog.guard_a, guard_b=prog.guard_b)
    aggregated: dict[int, Fraction] = {}
    for br in prog.branches:
        offset = sum(a * c for a, c in zip(prog.guard_a, br.delta))
        aggregated[offset] = aggregated.get(offset, Fraction(0)) + br.prob
    positive = [j for j, p in aggregated.items() if p > 0]
    m = max([0] + [j for j in positive if j > 0])
    k = max([0] + [-j for j in positive if j < 0])
    probs = {j: aggregated.get(j, Fraction(0)) for j in range(-k, m + 1)}
    if prog.reset is not None:
        direct = prog.reset.prob
        target = rdw.apply(prog.reset.target)
    else:
        direct = Fraction(0)
        target = 0
    walk = RandomWalkProgram(m=m, k=k, probs=probs, direct_prob=direct, reset_target=target)
    return walk, rdw


def is_trivial(prog: CpProgram) -> bool:
    """True iff a = 0 or the reduced walk is ``while (x>0) { x = x [1]; }``.

    Triviality is checked on the reduced form: if every offset is 0 and
    there is no direct termination, the walk has m = k = 0 and p_0 = 1.
    """
    if all(a == 0 for a in prog.guard_a):
        return True
    walk, _ = to_random_walk(prog)
    return walk.m == 0 and walk.k == 0 and walk.prob(0) == 1 and walk.direct_prob == 0
