"""Static analysis of constant-probability loop programs: almost-sure
termination verdicts, asymptotic runtime bounds, exact expected-runtime
closed forms, and two independent oracles (fixpoint iteration, Monte Carlo)
to cross-validate them."""

from .errors import (
    CprtError,
    InternalError,
    NotPastError,
    ParseError,
    PrecisionError,
    ResourceError,
    SingularSystemError,
    ValidationError,
)
from .exact import (
    AnalysisResult,
    ClosedForm,
    ConjugatePairTerm,
    Particular,
    ParticularKind,
    RealRootTerm,
    analyze_cp,
    closed_form_to_dict,
    evaluate,
    particular_solution,
    pretty_closed_form,
    solve_boundary,
)
from .oracles import (
    KleeneConvergence,
    KleeneTable,
    MatchReport,
    SimEstimate,
    distribution_match,
    kleene_converge,
    kleene_iterate,
    kleene_table,
    simulate,
    termination_time_test,
)
from .parser import parse_program
from .program import Branch, CpProgram, RandomWalkProgram, Reset, pretty, validate, validate_walk
from .reduction import RdwMap, is_trivial, to_random_walk
from .roots import CharPoly, Root, RootSet, characteristic_polynomial, filter_unit_disc, find_roots
from .termination import (
    Reason,
    RuntimeBounds,
    TrivialCase,
    Verdict,
    VerdictKind,
    bounds,
    decide,
    drift,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "Branch",
    "CharPoly",
    "ClosedForm",
    "ConjugatePairTerm",
    "CpProgram",
    "CprtError",
    "InternalError",
    "KleeneConvergence",
    "KleeneTable",
    "MatchReport",
    "NotPastError",
    "ParseError",
    "Particular",
    "ParticularKind",
    "PrecisionError",
    "RandomWalkProgram",
    "RdwMap",
    "RealRootTerm",
    "Reason",
    "Reset",
    "ResourceError",
    "Root",
    "RootSet",
    "RuntimeBounds",
    "SimEstimate",
    "SingularSystemError",
    "TrivialCase",
    "ValidationError",
    "Verdict",
    "VerdictKind",
    "analyze_cp",
    "bounds",
    "characteristic_polynomial",
    "closed_form_to_dict",
    "decide",
    "distribution_match",
    "drift",
    "evaluate",
    "filter_unit_disc",
    "find_roots",
    "is_trivial",
    "kleene_converge",
    "kleene_iterate",
    "kleene_table",
    "parse_program",
    "particular_solution",
    "pretty",
    "pretty_closed_form",
    "simulate",
    "solve_boundary",
    "termination_time_test",
    "to_random_walk",
    "validate",
    "validate_walk",
]
