"""Characteristic polynomial of the runtime recurrence and its roots.

For a walk with offsets -k..m the runtime recurrence has the degree-(k+m)
characteristic polynomial

    chi(lambda) = p_m*lambda^(k+m) + ... + p_1*lambda^(k+1)
                  + (p_0 - 1)*lambda^k + p_{-1}*lambda^(k-1) + ... + p_{-k}

with exact rational coefficients.  chi(1) = -p', so lambda = 1 is a root
exactly when there is no direct termination; under PAST it is simple
(chi'(1) = mu != 0) and is deflated by exact synthetic division before the
remaining roots are found numerically.  A PAST walk has exactly k roots
(with multiplicity) of modulus <= 1; that count, not the modulus alone, is
the arbiter when filtering.

All tolerances derive from the working precision N (decimal digits):
residuals must stay below 10^(-N/2), root clusters merge below 10^(-N/3).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from .errors import InternalError, PrecisionError
from .program import RandomWalkProgram

__all__ = [
    "GUARD_DIGITS",
    "CharPoly",
    "Root",
    "RootSet",
    "characteristic_polynomial",
    "find_roots",
    "filter_unit_disc",
    "cluster_tolerance",
    "residual_tolerance",
    "to_mpf",
]

GUARD_DIGITS = 15


def to_mpf(q: Fraction) -> mp.mpf:
    """Exact numerator/denominator conversion at the current working precision."""
    return mp.mpf(q.numerator) / mp.mpf(q.denominator)


def cluster_tolerance(precision: int) -> mp.mpf:
    return mp.mpf(10) ** (-mp.mpf(precision) / 3)


def residual_tolerance(precision: int) -> mp.mpf:
    return mp.mpf(10) ** (-mp.mpf(precision) / 2)


@dataclass(frozen=True)
class CharPoly:
    """coeffs[i] is the exact coefficient of lambda^i, i = 0..k+m."""

    coeffs: tuple[Fraction, ...]
    k: int
    m: int

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def at_one(self) -> Fraction:
        return sum(self.coeffs, Fraction(0))

    def eval_exact(self, x: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc


def characteristic_polynomial(rw: RandomWalkProgram) -> CharPoly:
    """Exact coefficients; the degree is k+m whenever the walk is PAST."""
    coeffs = [Fraction(0)] * (rw.k + rw.m + 1)
    for j, p in rw.probs.items():
        coeffs[rw.k + j] += p
    coeffs[rw.k] -= 1
    if coeffs[-1] == 0:
        raise InternalError(
            "characteristic polynomial degenerates (leading coefficient 0); "
            "the walk is not PAST or violates boundary positivity"
        )
    return CharPoly(coeffs=tuple(coeffs), k=rw.k, m=rw.m)


@dataclass(frozen=True)
class Root:
    value: mp.mpc
    multiplicity: int
    on_unit_circle: bool
    is_exact_one: bool

    @property
    def modulus(self) -> mp.mpf:
        return abs(self.value)

    @property
    def is_real(self) -> bool:
        return mp.im(self.value) == 0


@dataclass(frozen=True)
class RootSet:
    roots: tuple[Root, ...]
    precision: int
    cluster_tol: mp.mpf

    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.roots)


def _synthetic_division(coeffs: tuple[Fraction, ...], root: Fraction) -> tuple[Fraction, ...]:
    """Exact division by (lambda - root); the remainder must vanish."""
    quotient = [Fraction(0)] * (len(coeffs) - 1)
    acc = coeffs[-1]
    for i in range(len(coeffs) - 2, -1, -1):
        quotient[i] = acc
        acc = coeffs[i] + acc * root
    if acc != 0:
        raise InternalError(f"synthetic division left remainder {acc}")
    return tuple(quotient)


def _horner(coeffs_mp: list, z):
    acc = mp.mpc(0) if isinstance(z, mp.mpc) else mp.mpf(0)
    for c in reversed(coeffs_mp):
        acc = acc * z + c
    return acc


def _cluster(values: list, tol: mp.mpf) -> list[list]:
    """Single-link clustering; degree <= a few dozen, so O(n^2) is fine."""
    values = sorted(values, key=lambda z: (mp.re(z), mp.im(z)))
    parent = list(range(len(values)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i, z in enumerate(values):
        groups.setdefault(find(i), []).append(z)
    return sorted(groups.values(), key=lambda g: (mp.re(g[0]), mp.im(g[0])))


def _refine(coeffs_mp: list, deriv_mp: list, z, multiplicity: int):
    """Multiplicity-aware Newton: z -= v * chi(z)/chi'(z); quadratic at v-fold roots."""
    for _ in range(60):
        f = _horner(coeffs_mp, z)
        df = _horner(deriv_mp, z)
        if df == 0:
            break
        step = multiplicity * f / df
        z = z - step
        if abs(step) <= mp.mpf(2) ** (-mp.mp.prec + 8) * max(abs(z), mp.mpf(1)):
            break
    return z


def find_roots(poly: CharPoly, precision: int) -> RootSet:
    """All k+m roots with multiplicities at the requested working precision.

    lambda = 1 is split off exactly when chi(1) = 0; the rest go through a
    simultaneous-iteration solver, cluster detection for multiplicities,
    Newton polishing, and a residual check |chi(root)| < 10^(-precision/2).
    """
    with mp.workdps(precision + GUARD_DIGITS):
        tol = cluster_tolerance(precision)
        res_tol = residual_tolerance(precision)
        work = poly.coeffs
        exact_one = poly.at_one() == 0
        if exact_one:
            work = _synthetic_division(work, Fraction(1))

        numeric: list = []
        degree = len(work) - 1
        if degree >= 1:
            high_to_low = [to_mpf(c) for c in reversed(work)]
            try:
                numeric = mp.polyroots(high_to_low, maxsteps=120, extraprec=mp.mp.prec)
            except mp.NoConvergence:
                try:
                    numeric = mp.polyroots(high_to_low, maxsteps=600, extraprec=3 * mp.mp.prec)
                except mp.NoConvergence as exc:
                    raise PrecisionError(
                        f"root finder did not converge at {precision} digits"
                    ) from exc
            numeric = [mp.mpc(z) for z in numeric]

        # Snap near-real approximations onto the axis before clustering so a
        # conjugate pair of artifacts around a real root collapses cleanly.
        snapped = [mp.mpc(mp.re(z), 0) if abs(mp.im(z)) <= tol else z for z in numeric]

        coeffs_mp = [to_mpf(c) for c in poly.coeffs]
        deriv_mp = [i * c for i, c in enumerate(coeffs_mp)][1:]

        roots: list[Root] = []
        if exact_one:
            roots.append(Root(value=mp.mpc(1), multiplicity=1, on_unit_circle=True, is_exact_one=True))

        refined: list[tuple[mp.mpc, int]] = []
        for group in _cluster(snapped, tol):
            center = sum(group) / len(group)
            if abs(mp.im(center)) <= tol:
                center = mp.mpc(mp.re(center), 0)
            center = _refine(coeffs_mp, deriv_mp, center, len(group))
            if mp.im(center) != 0 and abs(mp.im(center)) <= tol:
                center = mp.mpc(mp.re(center), 0)
            refined.append((center, len(group)))

        # Real coefficients: enforce exact conjugate closure by mirroring the
        # members found in the upper half plane.
        uppers = [(z, v) for z, v in refined if mp.im(z) > 0]
        lowers = [(z, v) for z, v in refined if mp.im(z) < 0]
        if len(uppers) != len(lowers) or sorted(v for _, v in uppers) != sorted(v for _, v in lowers):
            raise PrecisionError("root set is not closed under conjugation at this precision")
        reals = [(z, v) for z, v in refined if mp.im(z) == 0]
        mirrored: list[tuple[mp.mpc, int]] = []
        for z, v in uppers:
            mirrored.append((z, v))
            mirrored.append((mp.conj(z), v))
        for value, mult in reals + mirrored:
            on_circle = abs(abs(value) - 1) <= tol
            roots.append(Root(value=value, multiplicity=mult, on_unit_circle=on_circle, is_exact_one=False))

        total = sum(r.multiplicity for r in roots)
        if total != poly.degree:
            raise InternalError(f"found multiplicity total {total}, expected degree {poly.degree}")

        for root in roots:
            if root.is_exact_one:
                continue  # residual is exactly chi(1) = 0
            if abs(_horner(coeffs_mp, root.value)) >= res_tol:
                raise PrecisionError(
                    f"residual at root {mp.nstr(root.value, 8)} exceeds 10^-{precision / 2:g}"
                )

        roots.sort(key=lambda r: (r.modulus, mp.re(r.value), mp.im(r.value)))
        return RootSet(roots=tuple(roots), precision=precision, cluster_tol=tol)


def filter_unit_disc(rs: RootSet, k: int) -> RootSet:
    """Retain the k roots of smallest modulus (counted with multiplicity).

    The retained count is the arbiter for membership on the unit circle;
    an ambiguous cut (k-th and (k+1)-th moduli closer than twice the cluster
    tolerance without the exactly-known root 1 at the boundary) and moduli
    that contradict the k-inside/rest-outside split raise PrecisionError.
    """
    ordered = sorted(rs.roots, key=lambda r: (r.modulus, mp.re(r.value), mp.im(r.value)))
    retained: list[Root] = []
    count = 0
    boundary = 0
    for i, root in enumerate(ordered):
        if count == k:
            boundary = i
            break
        count += root.multiplicity
        retained.append(root)
        boundary = i + 1
        if count > k:
            raise PrecisionError(
                "a multiplicity group straddles the unit-disc cut; root filtering is ambiguous"
            )
    if count < k:
        raise InternalError(f"only {count} roots available for k = {k}")
    excluded = ordered[boundary:]
    if retained and excluded:
        last = retained[-1]
        gap = excluded[0].modulus - last.modulus
        if gap < 2 * rs.cluster_tol and not last.is_exact_one:
            raise PrecisionError(
                f"moduli {mp.nstr(last.modulus, 10)} and {mp.nstr(excluded[0].modulus, 10)} "
                "are too close to separate at this precision"
            )
    if retained and retained[-1].modulus > 1 + rs.cluster_tol:
        raise PrecisionError(
            f"retained root modulus {mp.nstr(retained[-1].modulus, 10)} exceeds 1; "
            "contradicts the k-roots-inside count"
        )
    if excluded and excluded[0].modulus < 1 - rs.cluster_tol:
        raise PrecisionError(
            f"excluded root modulus {mp.nstr(excluded[0].modulus, 10)} is below 1; "
            "contradicts the k-roots-inside count"
        )
    return RootSet(roots=tuple(retained), precision=rs.precision, cluster_tol=rs.cluster_tol)
