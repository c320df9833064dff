"""Closed forms: published coefficients, evaluation goldens, recurrence laws."""

from fractions import Fraction

import mpmath as mp
import pytest

from cprt import (
    ParticularKind,
    PrecisionError,
    SingularSystemError,
    analyze_cp,
    evaluate,
    particular_solution,
    solve_boundary,
    to_random_walk,
)
from cprt.checks import boundary_residual, recurrence_residual
from cprt.exact import ConjugatePairTerm, RealRootTerm
from cprt.roots import Root, RootSet, cluster_tolerance

from conftest import PAST_FIXTURES, load


def analyze(name, precision=50):
    return analyze_cp(load(name), precision)


def real_coeff(cf, root_value, power=0):
    for term in cf.real_terms:
        if isinstance(term, RealRootTerm) and term.power == power \
                and abs(term.root - root_value) < mp.mpf("1e-30"):
            return term.coeff
    raise AssertionError(f"no real term at root {root_value} power {power}")


def test_particular_solutions():
    assert particular_solution(to_random_walk(load("mod_race"))[0]) \
        == particular_solution(to_random_walk(load("mod_race"))[0])
    part = particular_solution(to_random_walk(load("mod_race"))[0])
    assert (part.kind, part.coeff) == (ParticularKind.LINEAR, Fraction(22, 3))
    part = particular_solution(to_random_walk(load("direct"))[0])
    assert (part.kind, part.coeff) == (ParticularKind.CONSTANT, Fraction(10))
    part = particular_solution(to_random_walk(load("complex_roots"))[0])
    assert (part.kind, part.coeff) == (ParticularKind.LINEAR, Fraction(30, 13))


def test_mod_race_boundary_coefficients_golden():
    cf = analyze("mod_race").closed_form
    tol = mp.mpf(10) ** -20
    with mp.workdps(60):
        assert abs(real_coeff(cf, mp.mpf(1)) - mp.mpf(22) / 9) < tol
        assert abs(real_coeff(cf, mp.mpf(-0.5)) + mp.mpf(22) / 9) < tol


def test_multiplicity_boundary_coefficients_golden():
    cf = analyze("multiplicity").closed_form
    tol = mp.mpf(10) ** -20
    with mp.workdps(60):
        assert abs(real_coeff(cf, mp.mpf(1)) - mp.mpf(175) / 36) < tol
        assert abs(real_coeff(cf, mp.mpf("-0.2")) + mp.mpf(175) / 36) < tol
        assert abs(real_coeff(cf, mp.mpf("-0.2"), power=1) + mp.mpf(35) / 12) < tol


def test_direct_tail_closed_form_golden():
    cf = analyze("direct_tail").closed_form
    assert cf.particular.kind == ParticularKind.CONSTANT
    assert cf.particular.coeff == 8
    with mp.workdps(60):
        root = 2 - mp.sqrt(2)
        assert abs(real_coeff(cf, root) + 8) < mp.mpf(10) ** -10
    # irrational-root coefficient is accurate far beyond the required 1e-10
        assert abs(real_coeff(cf, root) + 8) < mp.mpf(10) ** -40


def test_complex_roots_closed_form_golden():
    cf = analyze("complex_roots").closed_form
    pairs = [t for t in cf.real_terms if isinstance(t, ConjugatePairTerm)]
    assert len(pairs) == 1
    pair = pairs[0]
    with mp.workdps(60):
        assert abs(pair.modulus - mp.mpf(2) / 5) < mp.mpf(10) ** -40
        assert abs(pair.angle - 2 * mp.pi / 3) < mp.mpf(10) ** -40
        assert abs(pair.cos_coeff + mp.mpf(180) / 169) < mp.mpf(10) ** -40
        assert abs(pair.sin_coeff - 4 * mp.sqrt(3) / 169) < mp.mpf(10) ** -40
        assert abs(real_coeff(cf, mp.mpf(1)) - mp.mpf(180) / 169) < mp.mpf(10) ** -40


def test_complex_roots_matches_published_form_pointwise():
    cf = analyze("complex_roots").closed_form
    with mp.workdps(60):
        for x in range(1, 21):
            published = (
                mp.mpf(30) / 13 * x
                + mp.mpf(180) / 169
                - mp.mpf(180) / 169 * (mp.mpf(2) / 5) ** x * mp.cos(2 * mp.pi / 3 * x)
                + mp.mpf(4) / 169 * mp.sqrt(3) * (mp.mpf(2) / 5) ** x * mp.sin(2 * mp.pi / 3 * x)
            )
            assert abs(evaluate(cf, x) - published) < mp.mpf(10) ** -8


def test_irrational_runtime_golden():
    cf = analyze("irrational").closed_form
    with mp.workdps(60):
        assert abs(evaluate(cf, 1) - (1 + mp.sqrt(5))) < mp.mpf(10) ** -10
        # full closed form: 2x + 3 - sqrt(5) + (sqrt(5)-3)*((1-sqrt(5))/2)^x
        a = 3 - mp.sqrt(5)
        root = (1 - mp.sqrt(5)) / 2
        for x in range(1, 15):
            expected = 2 * x + a - a * root ** x
            assert abs(evaluate(cf, x) - expected) < mp.mpf(10) ** -40


def test_constant_runtime_for_direct(direct):
    result = analyze_cp(direct, 50)
    cf = result.closed_form
    assert cf.real_terms == ()
    for x in (1, 2, 10, 500):
        assert evaluate(cf, x) == 10
    assert result.runtime_at((0, 5)) == 0
    assert result.runtime_at((5, 1)) == 10


def test_negative_binomial_and_decrement_are_pure_lines():
    for name, slope in [("negative_binomial", 2), ("fast_decrement", 2), ("decrement", 1)]:
        cf = analyze(name).closed_form
        with mp.workdps(60):
            for x in (1, 3, 17):
                assert abs(evaluate(cf, x) - slope * x) < mp.mpf(10) ** -45


def test_race_pair_terms_match_reference_table():
    # Reference figures for the race walk, as displayed by the original
    # analyzer at ~2-digit working precision: (modulus, angle, cos coeff,
    # sin coeff) per conjugate pair.  That display carries up to ~0.04 of
    # low-precision error (e.g. angle 2.2 vs exact 2.1634), hence the 0.05
    # tolerance here; exact-value assertions live in the tests above.
    reference = [
        (0.65, 2.8, -0.35, 0.049),
        (0.66, 2.2, -0.35, 0.15),
        (0.70, 1.5, -0.39, 0.30),
        (0.75, 0.83, -0.49, 0.62),
    ]
    cf = analyze("race").closed_form
    pairs = sorted(
        ((float(t.modulus), float(t.angle), float(t.cos_coeff), float(t.sin_coeff))
         for t in cf.real_terms if isinstance(t, ConjugatePairTerm)),
        key=lambda row: row[0],
    )
    assert len(pairs) == 4
    for got, want in zip(pairs, reference):
        for g, w in zip(got, want):
            assert abs(g - w) < 0.05


def test_race_headline_value():
    # Both independent oracles agree with this closed-form value; the
    # reference analyzer's displayed 670 reflects its 2-digit working precision.
    result = analyze_cp(load("race"), 50)
    value = result.runtime_at((1000, 0))
    with mp.workdps(60):
        assert abs(value - mp.mpf("668.91889586546085739")) < mp.mpf(10) ** -12


def test_reset_only_program_runs_exactly_once():
    from cprt import parse_program, simulate

    prog = parse_program("vars x\nwhile 1*x > 0 { reset (0) [1]; }")
    result = analyze_cp(prog, 50)
    assert result.walk.m == result.walk.k == 0
    assert result.closed_form.particular.coeff == 1
    for x in (1, 5, 100):
        assert evaluate(result.closed_form, x) == 1
    est = simulate(prog, (5,), trials=200, step_cap=10, seed=1)
    assert (est.mean, est.half_width_95) == (1.0, 0.0)


def test_retained_complex_coefficients_are_conjugate():
    cf = analyze("race").closed_form
    with mp.workdps(60):
        tol = mp.mpf(10) ** -30
        nonreal = [t for t in cf.complex_terms if mp.im(t.root) != 0]
        assert len(nonreal) == 8
        for term in nonreal:
            partner = [
                s for s in nonreal
                if s.power == term.power
                and mp.re(s.root) == mp.re(term.root)
                and mp.im(s.root) + mp.im(term.root) == 0
            ]
            assert len(partner) == 1
            assert abs(mp.re(partner[0].coeff) - mp.re(term.coeff)) < tol
            assert abs(mp.im(partner[0].coeff) + mp.im(term.coeff)) < tol


def test_evaluate_is_zero_on_violating_inputs():
    cf = analyze("mod_race").closed_form
    assert evaluate(cf, 0) == 0
    assert evaluate(cf, -5) == 0


@pytest.mark.parametrize("name", PAST_FIXTURES)
def test_recurrence_holds_everywhere(name):
    result = analyze(name)
    assert recurrence_residual(result, range(1, 101)) < mp.mpf(10) ** -25


@pytest.mark.parametrize("name", PAST_FIXTURES)
def test_boundary_values_vanish(name):
    result = analyze(name)
    assert boundary_residual(result) < mp.mpf(10) ** -25


@pytest.mark.parametrize("name", PAST_FIXTURES)
def test_rt_at_least_one_inside_guard(name):
    cf = analyze(name).closed_form
    for x in (1, 2, 5, 50):
        assert evaluate(cf, x) >= 1 - mp.mpf(10) ** -20


def test_verdict_gates_closed_form():
    for name in ("symmetric", "zero_drift_race", "positive_drift_race", "spin"):
        result = analyze(name)
        assert result.closed_form is None
        assert result.bounds is None


def test_duplicate_root_listing_makes_singular_system():
    # two distinct entries at the same value defeat the confluent structure
    half = mp.mpc("0.5")
    rs = RootSet(
        roots=(
            Root(value=half, multiplicity=1, on_unit_circle=False, is_exact_one=False),
            Root(value=half, multiplicity=1, on_unit_circle=False, is_exact_one=False),
        ),
        precision=50,
        cluster_tol=cluster_tolerance(50),
    )
    part = particular_solution(to_random_walk(load("irrational"))[0])
    with pytest.raises(SingularSystemError):
        solve_boundary(part, rs, 2, 50)


def test_low_precision_analysis_of_tight_roots_fails_loud():
    from cprt import parse_program

    prog = parse_program(
        "vars x\nwhile 1*x > 0 { inc (1) [1/4]; inc (0) [1/2]; "
        "inc (-1) [99999999/400000000]; reset (0) [1/400000000]; }"
    )
    with pytest.raises(PrecisionError):
        analyze_cp(prog, 9)
    assert analyze_cp(prog, 50).closed_form is not None
