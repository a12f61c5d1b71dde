"""Security typing of arithmetic expressions and tests."""

from __future__ import annotations

from .lang import AExp, BExp, Level, LO, SecEnv, UnknownVariableError, vars_of

ExprOrTest = AExp | BExp


def min_tp(e: ExprOrTest, env: SecEnv) -> Level:
    """Join of the levels of the variables of ``e`` (``LO`` if there are none)."""
    level = LO
    for x in vars_of(e):
        try:
            level = max(level, env[x])
        except KeyError:
            raise UnknownVariableError(x) from None
    return Level(level)


def has_type(e: ExprOrTest, level: Level, env: SecEnv) -> bool:
    return min_tp(e, env) <= level


def is_low(e: ExprOrTest, env: SecEnv) -> bool:
    return min_tp(e, env) == LO
