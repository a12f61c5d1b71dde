import random

import pytest
from hypothesis import strategies as st

from nicheck.lang import (HI, LO, And, Assign, BinOp, BoolConst, Cmp, If, IntConst,
                          Not, Or, Par, Seq, Var, While, random_cmd)

ENV = {"l": LO, "l2": LO, "h": HI, "h2": HI}
SMALL_ENV = {"l": LO, "h": HI}


@pytest.fixture
def env():
    return dict(ENV)


def names(env=ENV):
    return st.sampled_from(sorted(env))


def aexps(env=ENV):
    leaves = st.one_of(st.integers(0, 5).map(IntConst), names(env).map(Var))
    return st.recursive(
        leaves,
        lambda kid: st.builds(BinOp, st.sampled_from("+-*"), kid, kid),
        max_leaves=6)


def bexps(env=ENV):
    base = st.one_of(st.booleans().map(BoolConst),
                     st.builds(Cmp, st.sampled_from(["=", "<", "<="]), aexps(env), aexps(env)))
    return st.recursive(
        base,
        lambda kid: st.one_of(kid.map(Not), st.builds(And, kid, kid), st.builds(Or, kid, kid)),
        max_leaves=4)


def cmds(env=ENV, max_leaves=8):
    atoms = st.builds(Assign, names(env), aexps(env))
    return st.recursive(
        atoms,
        lambda kid: st.one_of(st.builds(Seq, kid, kid), st.builds(Par, kid, kid),
                              st.builds(If, bexps(env), kid, kid),
                              st.builds(While, bexps(env), kid)),
        max_leaves=max_leaves)


def seeded_cmds(count, seed=0, depth=6, vars=("l", "l2", "h")):
    rng = random.Random(seed)
    return [random_cmd(rng, depth, vars) for _ in range(count)]


# one line per acceptance criterion, printed after the run
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
