"""Shared fixtures: the bundled example programs and their parsed forms."""

from pathlib import Path

import pytest

from cprt import parse_program

PROGRAMS_DIR = Path(__file__).resolve().parent.parent / "programs"

# Every PAST program in the bundle, i.e. everything the exact pipeline covers.
PAST_FIXTURES = [
    "race",
    "mod_race",
    "direct",
    "direct_tail",
    "complex_roots",
    "multiplicity",
    "negative_binomial",
    "irrational",
    "fast_decrement",
    "decrement",
]

NON_PAST_FIXTURES = ["symmetric", "zero_drift_race", "positive_drift_race", "spin"]


def source(name: str) -> str:
    return (PROGRAMS_DIR / f"{name}.cp").read_text(encoding="utf-8")


def load(name: str):
    return parse_program(source(name))


@pytest.fixture(scope="session")
def race():
    return load("race")


@pytest.fixture(scope="session")
def mod_race():
    return load("mod_race")


@pytest.fixture(scope="session")
def direct():
    return load("direct")
