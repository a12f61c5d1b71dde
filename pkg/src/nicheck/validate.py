"""Corpus-driven validation of the type systems against their oracles and
against the semantics.

The exhaustive corpus is every command of size at most ``max_size`` (see
:func:`~nicheck.lang.cmd_size`) over two low variables and one high
variable, with fixed expression and test pools.  Random commands use freshly generated
expressions over the same variables.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .lang import (HI, LO, Assign, BinOp, BoolConst, Cmd, Cmp, IntConst, Var,
                   count_cmds, enumerate_aexps, enumerate_bexps, enumerate_cmds,
                   pretty_aexp, pretty_bexp, pretty_cmd, random_cmd)
from .semantics import (DEFAULT_CAP, CapExceeded, RelationTooLarge, SecBisimMode,
                        StateSpace, check_modes, cpt_atom, cpt_test, explore,
                        lts_discr, lts_may_terminate, pres_atom)
from .typesys import (SystemId, analyze, characterized_mask, deriv_mask,
                      deriv_masks, deriv_set_exp)
from .typing_base import min_tp

LOW_VARS = ("l", "l2")
HIGH_VARS = ("h",)
CORPUS_VARS = LOW_VARS + HIGH_VARS
CORPUS_ENV = {**{x: LO for x in LOW_VARS}, **{x: HI for x in HIGH_VARS}}
EXPR_POOL = (IntConst(0), IntConst(1), Var("l"), Var("h"),
             BinOp("+", Var("l"), IntConst(1)), BinOp("+", Var("h"), IntConst(1)))
TEST_POOL = (BoolConst(True), Cmp("=", Var("l"), IntConst(0)),
             Cmp("=", Var("h"), IntConst(0)), Cmp("<", Var("l"), Var("h")))
ATOM_POOL = tuple(Assign(x, e) for x in CORPUS_VARS for e in EXPR_POOL)
RANDOM_DEPTH = 6
EXPR_NODES = 5
ATOM_MODULI = (2, 3)

# Each system and the bisimulation mode its acceptance guarantees.
SOUND_MODE = {
    SystemId.VS2: SecBisimMode.STRONG,
    SystemId.VS1: SecBisimMode.WEAK_T,
    SystemId.BC: SecBisimMode.ZERO_ONE,
    SystemId.MB: SecBisimMode.WEAK,
}

SUITES = ("lemma", "identities", "discreet", "soundness")
MAX_EXAMPLES = 5
_SYSTEMS = tuple(SystemId)
_SPACE_LIMIT = 300_000


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    skipped: int = 0
    failures: int = 0
    examples: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def fail(self, message: str) -> None:
        self.failures += 1
        if len(self.examples) < MAX_EXAMPLES:
            self.examples.append(message)


@dataclass
class Summary:
    results: list[SuiteResult]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failures(self) -> int:
        return sum(r.failures for r in self.results)

    def render(self) -> str:
        width = max(len(r.name) for r in self.results)
        lines = [f"{'suite':<{width}}  {'checked':>9}  {'skipped':>7}  {'failures':>8}"]
        for r in self.results:
            lines.append(f"{r.name:<{width}}  {r.checked:>9}  {r.skipped:>7}  {r.failures:>8}")
        for r in self.results:
            for msg in r.examples:
                lines.append(f"[{r.name}] {msg}")
            if r.failures > len(r.examples):
                lines.append(f"[{r.name}] ... {r.failures - len(r.examples)} more")
        lines.append(f"result: {'ok' if self.ok else f'{self.failures} discrepancies'}")
        return "\n".join(lines)


def corpus(max_size: int) -> Iterable[Cmd]:
    return enumerate_cmds(max_size, CORPUS_VARS, EXPR_POOL, TEST_POOL)


def corpus_size(max_size: int) -> int:
    return count_cmds(max_size, len(ATOM_POOL), len(TEST_POOL))


def random_commands(count: int, seed: int, depth: int = RANDOM_DEPTH) -> list[Cmd]:
    rng = random.Random(seed)
    return [random_cmd(rng, depth, CORPUS_VARS) for _ in range(count)]


# -- expression and atom suites -------------------------------------------------

def check_expressions(max_nodes: int = EXPR_NODES, env=CORPUS_ENV) -> SuiteResult:
    """Rule-derived expression levels are exactly those above ``min_tp``."""
    res = SuiteResult("expression typing")
    cases = [(e, pretty_aexp) for e in enumerate_aexps(max_nodes, list(env))]
    cases += [(b, pretty_bexp) for b in enumerate_bexps(max_nodes, list(env))]
    for e, show in cases:
        res.checked += 1
        lo = min_tp(e, env)
        expected = frozenset(l for l in (LO, HI) if lo <= l)
        got = deriv_set_exp(e, env)
        if got != expected:
            res.fail(f"{show(e)}: rules give {_levels(got)}, min_tp gives {_levels(expected)}")
    return res


def check_atoms(moduli: Sequence[int] = ATOM_MODULI, env=CORPUS_ENV) -> SuiteResult:
    """Syntactic checks on pool tests and atoms imply their semantic versions."""
    res = SuiteResult("atoms and tests")
    for m in moduli:
        for t in TEST_POOL:
            if min_tp(t, env) == LO:
                res.checked += 1
                if not cpt_test(t, env, m):
                    res.fail(f"m={m}: low test {pretty_bexp(t)} is not cpt")
        for a in ATOM_POOL:
            info = analyze(a, env)
            if info.fhigh:
                res.checked += 1
                if not pres_atom(a, env, m):
                    res.fail(f"m={m}: fhigh atom {pretty_cmd(a)} is not pres")
            if info.safe1:
                res.checked += 1
                if not cpt_atom(a, env, m):
                    res.fail(f"m={m}: safe1 atom {pretty_cmd(a)} is not cpt")
    return res


def _levels(levels) -> str:
    return "{" + ", ".join(str(l) for l in sorted(levels)) + "}"


# -- per-command suites ----------------------------------------------------------

class _Checker:
    def __init__(self, label: str, suites: Sequence[str], modulus: int, cap: int,
                 env=CORPUS_ENV):
        unknown = set(suites) - set(SUITES)
        if unknown:
            raise ValueError(f"unknown suites: {sorted(unknown)}")
        self.env = env
        self.suites = tuple(s for s in SUITES if s in suites)
        self.modulus = modulus
        self.cap = cap
        self.results = {s: SuiteResult(f"{_TITLES[s]} ({label})") for s in self.suites}
        self.analysis: dict = {}
        self.derivs: dict = {}
        self.space = StateSpace(env, modulus) if {"discreet", "soundness"} & set(suites) else None

    def forget(self, c: Cmd) -> None:
        self.analysis.pop(c, None)
        self.derivs.pop(c, None)

    def run(self, c: Cmd) -> None:
        info = analyze(c, self.env, self.analysis)
        for suite in self.suites:
            getattr(self, "_" + suite)(c, info, self.results[suite])
        if self.space is not None and self.space.size > _SPACE_LIMIT:
            self.space.reset()

    def _lemma(self, c, info, res):
        masks = deriv_masks(c, self.env, self.derivs)
        for system, got in zip(_SYSTEMS, masks):
            res.checked += 1
            if got != characterized_mask(info, system):
                res.fail(f"{system.value}: {pretty_cmd(c)}")
        # the alternative loop rule derives the same read/write types
        res.checked += 1
        if deriv_mask(c, self.env, SystemId.BC, self.derivs, while_prime=True) != masks[2]:
            res.fail(f"bc while': {pretty_cmd(c)}")

    def _identities(self, c, info, res):
        res.checked += 1
        broken = []
        if info.safe1 != (info.safe4 and info.wlow):
            broken.append("safe1 = safe4 and wlow")
        if info.safe2 and not info.safe1:
            broken.append("safe2 => safe1")
        if info.safe1 and not info.safe4:
            broken.append("safe1 => safe4")
        if info.safe3 and not info.safe4:
            broken.append("safe3 => safe4")
        if not info.min_trtp <= info.min_rtp:
            broken.append("min_trtp <= min_rtp")
        if not info.max_tp1 <= info.max_wtp:
            broken.append("max_tp1 <= max_wtp")
        for what in broken:
            res.fail(f"{what}: {pretty_cmd(c)}")

    def _discreet(self, c, info, res):
        if not info.fhigh:
            return
        res.checked += 1
        try:
            lts = explore(self.space, c, self.cap)
        except CapExceeded:
            res.skipped += 1
            return
        if not lts_discr(lts):
            res.fail(f"fhigh but not discr: {pretty_cmd(c)}")
        if not lts_may_terminate(lts):
            res.fail(f"fhigh but not mayT: {pretty_cmd(c)}")

    def _soundness(self, c, info, res):
        modes = [mode for system, mode in SOUND_MODE.items() if info.safe(system)]
        if not modes:
            return
        res.checked += len(modes)
        try:
            verdicts = check_modes(explore(self.space, c, self.cap), modes, witness=False)
        except (CapExceeded, RelationTooLarge):
            res.skipped += len(modes)
            return
        for mode, v in verdicts.items():
            if not v.secure:
                res.fail(f"safe but not {mode.value}-secure: {pretty_cmd(c)}")


_TITLES = {
    "lemma": "lemma equivalence",
    "identities": "identities",
    "discreet": "fhigh => discr, mayT",
    "soundness": "soundness",
}


def check_corpus(max_size: int, suites: Sequence[str] = SUITES, modulus: int = 2,
                 cap: int = DEFAULT_CAP) -> list[SuiteResult]:
    """Run the per-command suites over the exhaustive corpus in one pass."""
    checker = _Checker("exhaustive", suites, modulus, cap)
    # commands of the largest size are never subterms of later ones
    keep = corpus_size(max_size - 1) if max_size > 1 else 0
    for i, c in enumerate(corpus(max_size)):
        checker.run(c)
        if i >= keep:
            checker.forget(c)
    return list(checker.results.values())


def check_random(commands: Iterable[Cmd], suites: Sequence[str] = SUITES,
                 modulus: int = 2, cap: int = DEFAULT_CAP) -> list[SuiteResult]:
    """Run the per-command suites over arbitrary commands."""
    checker = _Checker("random", suites, modulus, cap)
    for c in commands:
        checker.run(c)
        checker.forget(c)
    return list(checker.results.values())


def validate(max_size: int = 4, modulus: int = 2, random_count: int = 1000,
             seed: int = 0, cap: int = DEFAULT_CAP) -> Summary:
    if max_size < 1 or modulus < 2 or random_count < 0 or cap < 1:
        raise ValueError("max-size and cap must be >= 1, modulus >= 2, random count >= 0")
    results = [check_expressions(), check_atoms(sorted({*ATOM_MODULI, modulus}))]
    results += check_corpus(max_size, modulus=modulus, cap=cap)
    if random_count:
        results += check_random(random_commands(random_count, seed), modulus=modulus, cap=cap)
    return Summary(results)
