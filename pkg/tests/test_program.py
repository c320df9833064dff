"""Data model: validation invariants, rational exactness, pretty round-trips."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cprt import (
    Branch,
    CpProgram,
    RandomWalkProgram,
    Reset,
    ValidationError,
    parse_program,
    pretty,
    validate,
    validate_walk,
)

from conftest import PAST_FIXTURES, NON_PAST_FIXTURES, load


rationals = st.fractions(min_value=-100, max_value=100, max_denominator=1000)


@given(rationals, rationals)
def test_rational_arithmetic_round_trips(p, q):
    assert (p + q) - q == p
    assert isinstance(p + q, Fraction)
    if q != 0:
        assert (p / q) * q == p


@st.composite
def cp_programs(draw):
    r = draw(st.integers(1, 3))
    names = tuple(f"v{i}" for i in range(r))
    guard_a = tuple(draw(st.integers(-3, 3)) for _ in range(r))
    guard_b = draw(st.integers(-5, 5))
    n = draw(st.integers(1, 4))
    deltas = draw(
        st.lists(
            st.tuples(*[st.integers(-3, 3)] * r),
            min_size=n,
            max_size=n,
            unique=True,
        )
    )
    weights = [draw(st.integers(1, 9)) for _ in deltas]
    use_reset = draw(st.booleans()) and guard_b >= 0
    reset = None
    if use_reset:
        weights.append(draw(st.integers(1, 9)))
        reset = Reset(target=(0,) * r, prob=Fraction(weights[-1], sum(weights)))
    den = sum(weights)
    branches = tuple(
        Branch(delta=d, prob=Fraction(w, den)) for d, w in zip(deltas, weights)
    )
    return CpProgram(
        var_names=names, guard_a=guard_a, guard_b=guard_b, branches=branches, reset=reset
    )


@given(cp_programs())
def test_parse_pretty_round_trip(prog):
    validate(prog)
    assert parse_program(pretty(prog)) == prog


@pytest.mark.parametrize("name", PAST_FIXTURES + NON_PAST_FIXTURES)
def test_fixtures_validate(name):
    validate(load(name))


@pytest.mark.parametrize("name", PAST_FIXTURES + NON_PAST_FIXTURES)
def test_fixtures_reject_perturbed_probability(name):
    prog = load(name)
    first = prog.branches[0]
    perturbed = CpProgram(
        var_names=prog.var_names,
        guard_a=prog.guard_a,
        guard_b=prog.guard_b,
        branches=(Branch(first.delta, first.prob + Fraction(1, 1000)),) + prog.branches[1:],
        reset=prog.reset,
    )
    with pytest.raises(ValidationError, match="sum"):
        validate(perturbed)


def test_duplicate_deltas_rejected():
    prog = CpProgram(
        var_names=("x",),
        guard_a=(1,),
        guard_b=0,
        branches=(
            Branch((1,), Fraction(1, 2)),
            Branch((1,), Fraction(1, 2)),
        ),
    )
    with pytest.raises(ValidationError, match="duplicate"):
        validate(prog)


def test_reset_must_violate_guard():
    prog = CpProgram(
        var_names=("x",),
        guard_a=(1,),
        guard_b=0,
        branches=(Branch((-1,), Fraction(1, 2)),),
        reset=Reset(target=(1,), prob=Fraction(1, 2)),
    )
    with pytest.raises(ValidationError, match="a.d"):
        validate(prog)


def test_race_validates_and_direct_does(race, direct):
    validate(race)
    validate(direct)


def test_as_random_walk_recognizes_normal_form():
    walk = load("mod_race").as_random_walk()
    assert walk is not None
    assert (walk.m, walk.k) == (1, 2)
    assert walk.probs[1] == Fraction(6, 11)
    assert walk.probs[-2] == Fraction(7, 22)
    validate_walk(walk)


def test_as_random_walk_rejects_multivariate(race):
    assert race.as_random_walk() is None


def test_walk_round_trips_through_cp_form():
    walk = load("irrational").as_random_walk()
    again = walk.as_cp_program().as_random_walk()
    assert again == walk


def test_walk_validation_requires_boundary_positivity():
    walk = RandomWalkProgram(
        m=1,
        k=1,
        probs={1: Fraction(0), 0: Fraction(1, 2), -1: Fraction(1, 2)},
        direct_prob=Fraction(0),
        reset_target=0,
    )
    with pytest.raises(ValidationError, match="p_m"):
        validate_walk(walk)


def test_walk_validation_rejects_positive_reset_target():
    walk = RandomWalkProgram(
        m=0,
        k=1,
        probs={0: Fraction(0), -1: Fraction(1, 2)},
        direct_prob=Fraction(1, 2),
        reset_target=3,
    )
    with pytest.raises(ValidationError, match="d <= 0"):
        validate_walk(walk)


def test_pretty_is_stable(race):
    canonical = pretty(race)
    assert parse_program(canonical) == race
    assert pretty(parse_program(canonical)) == canonical
