"""Reduction to random walk form: goldens and structural properties."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cprt import is_trivial, parse_program, to_random_walk, validate_walk

from conftest import PAST_FIXTURES, NON_PAST_FIXTURES, load

from test_program import cp_programs


def test_race_reduces_to_expected_walk(race):
    walk, rdw = to_random_walk(race)
    assert (walk.m, walk.k) == (1, 9)
    assert walk.probs[1] == Fraction(6, 11)
    assert walk.probs[0] == Fraction(1, 22)
    for j in range(1, 10):
        assert walk.probs[-j] == Fraction(1, 22)
    assert walk.direct_prob == 0
    assert rdw.apply((5, 1)) == 5  # t - h + 1
    assert rdw.apply((1000, 0)) == 1001


def test_walk_program_is_fixed_point():
    prog = load("mod_race")
    walk, rdw = to_random_walk(prog)
    assert walk == prog.as_random_walk()
    assert (rdw.guard_a, rdw.guard_b) == ((1,), 0)
    again, _ = to_random_walk(walk.as_cp_program())
    assert again == walk


def test_direct_reduces_with_zero_k(direct):
    walk, rdw = to_random_walk(direct)
    assert (walk.m, walk.k) == (1, 0)
    assert walk.probs[1] == Fraction(9, 10)
    assert walk.direct_prob == Fraction(1, 10)
    assert walk.reset_target == rdw.apply((7, 8)) == 0


def test_interior_zero_offsets_are_retained():
    walk, _ = to_random_walk(load("zero_drift_race"))
    assert (walk.m, walk.k) == (1, 4)
    assert walk.probs[-1] == 0
    assert walk.probs[-3] == 0
    assert walk.probs[-4] == Fraction(1, 11)


def test_zero_probability_extreme_does_not_widen_range():
    prog = parse_program(
        "vars x\nwhile 1*x > 0 { inc (5) [0]; inc (0) [1/2]; inc (-1) [1/2]; }"
    )
    walk, _ = to_random_walk(prog)
    assert (walk.m, walk.k) == (0, 1)


@given(cp_programs(), st.tuples(st.integers(-50, 50), st.integers(-50, 50), st.integers(-50, 50)))
def test_offset_consistency(prog, state3):
    walk, rdw = to_random_walk(prog)
    state = state3[: len(prog.var_names)]
    for br in prog.branches:
        moved = tuple(z + c for z, c in zip(state, br.delta))
        offset = sum(a * c for a, c in zip(prog.guard_a, br.delta))
        assert rdw.apply(moved) - rdw.apply(state) == offset
        if br.prob > 0:
            assert -walk.k <= offset <= walk.m


@given(cp_programs())
def test_probability_mass_is_conserved(prog):
    walk, _ = to_random_walk(prog)
    total = sum(walk.probs.values(), Fraction(0)) + walk.direct_prob
    assert total == 1
    validate_walk(walk)


@pytest.mark.parametrize("name", PAST_FIXTURES + NON_PAST_FIXTURES)
def test_all_fixture_reductions_validate(name):
    walk, _ = to_random_walk(load(name))
    validate_walk(walk)


def test_zero_guard_is_trivial():
    assert is_trivial(parse_program("vars x\nwhile 0*x > -1 { inc (1) [1]; }"))
    assert is_trivial(parse_program("vars x\nwhile 0*x > 1 { inc (1) [1]; }"))


def test_self_loop_is_trivial():
    assert is_trivial(load("spin"))


def test_hidden_self_loop_is_trivial():
    # all offsets collapse to 0 in guard space even though deltas differ
    prog = parse_program(
        "vars t, h\nwhile 1*t - 1*h > 0 { inc (1, 1) [1/2]; inc (2, 2) [1/2]; }"
    )
    assert is_trivial(prog)


def test_race_is_not_trivial(race):
    assert not is_trivial(race)
