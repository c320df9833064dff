"""Verification suite behavior, including the perturbation negative control."""

import dataclasses

import mpmath as mp
import pytest

from cprt import analyze_cp
from cprt.checks import boundary_residual, run_checks
from cprt.exact import ComplexTerm

from conftest import load


@pytest.mark.parametrize("name", ["mod_race", "direct", "irrational"])
def test_run_checks_passes_on_fixtures(name):
    report = run_checks(analyze_cp(load(name), 50))
    assert report.all_passed
    assert [c.name for c in report.checks] == [
        "recurrence_residual",
        "boundary_residual",
        "retained_root_count",
        "bounds_envelope",
        "addon_sign",
        "nonnegativity",
        "kleene_sandwich",
    ]


def _perturb_first_coefficient(result, amount):
    cf = result.closed_form
    first = cf.complex_terms[0]
    bumped = ComplexTerm(root=first.root, power=first.power,
                         coeff=first.coeff + mp.mpf(amount))
    new_cf = dataclasses.replace(cf, complex_terms=(bumped,) + cf.complex_terms[1:])
    return dataclasses.replace(result, closed_form=new_cf)


def test_perturbed_coefficient_fails_boundary_check():
    result = analyze_cp(load("mod_race"), 50)
    perturbed = _perturb_first_coefficient(result, "1e-3")
    assert boundary_residual(result) < mp.mpf(10) ** -25
    assert boundary_residual(perturbed) > mp.mpf(10) ** -4
    report = run_checks(perturbed)
    assert not report.all_passed
    failed = {c.name for c in report.checks if not c.passed}
    assert "boundary_residual" in failed


def test_checks_reject_non_past_results():
    with pytest.raises(ValueError, match="PAST"):
        run_checks(analyze_cp(load("symmetric"), 50))
