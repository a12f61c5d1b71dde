"""Security type systems for a small concurrent while language, with a
bounded-state semantics to check them against."""

from .lang import (HI, LO, Level, NicheckError, ParseError, Program,
                   UnknownVariableError, parse_cmd, parse_program, pretty_cmd,
                   pretty_print)
from .semantics import (CapExceeded, SecBisimMode, Verdict, build_lts, discr,
                        may_terminate, mayT, secure)
from .typesys import Analysis, SystemId, analyze, check_lemma_equiv
from .typing_base import has_type, min_tp

__all__ = [
    "HI", "LO", "Level", "NicheckError", "ParseError", "Program", "UnknownVariableError",
    "parse_cmd", "parse_program", "pretty_cmd", "pretty_print",
    "CapExceeded", "SecBisimMode", "Verdict", "build_lts", "discr", "may_terminate",
    "mayT", "secure",
    "Analysis", "SystemId", "analyze", "check_lemma_equiv",
    "has_type", "min_tp",
]
