from functools import lru_cache
from itertools import product

import pytest
from hypothesis import given, settings

from nicheck.lang import (HI, LO, Assign, BoolConst, Cmp, If, IntConst, Par, Seq, Var,
                          While, no_while, parse_cmd, vars_of)
from nicheck.typesys import (Analysis, SystemId, analyze, check_lemma_equiv,
                             deriv_set_rw, deriv_set_vs, describe_failure, first_failure)
from nicheck.validate import CORPUS_ENV, corpus

from conftest import ENV, cmds, seeded_cmds

VS1, VS2, BC, MB = SystemId.VS1, SystemId.VS2, SystemId.BC, SystemId.MB
LEVELS = (LO, HI)
PAIRS = tuple(product(LEVELS, LEVELS))
ALL_PAIRS = frozenset(PAIRS)

H0 = Cmp("=", Var("h"), IntConst(0))


def a(x, v):
    return Assign(x, IntConst(v) if isinstance(v, int) else Var(v))


# -- independent rule-search oracle ---------------------------------------------
#
# Each rule is applied by trying every choice of the levels it quantifies
# over, then the subtyping rule is saturated.

def close_vs(types):
    out = set(types)
    for l in types:
        out |= {k for k in LEVELS if k <= l}
    return frozenset(out)


def close_rw(types):
    out = set(types)
    for w, r in types:
        out |= {(w2, r2) for w2, r2 in PAIRS if w2 <= w and r <= r2}
    return frozenset(out)


def make_oracle(env, system, while_prime=False):
    def exp_types(e):
        return {l for l in LEVELS if all(env[x] <= l for x in vars_of(e))}

    @lru_cache(maxsize=None)
    def vs(c):
        match c:
            case Assign(x, e):
                return close_vs({env[x]} if env[x] in exp_types(e) else set())
            case Seq(c1, c2) | Par(c1, c2):
                return close_vs(vs(c1) & vs(c2))
            case If(t, c1, c2):
                # the stricter system asks for a low test instead of t :: l
                ok = (lambda l: LO in exp_types(t)) if system is VS2 else \
                     (lambda l: l in exp_types(t))
                return close_vs({l for l in vs(c1) & vs(c2) if ok(l)})
            case While(t, body):
                return close_vs({LO} if LO in exp_types(t) and vs(body) else set())

    @lru_cache(maxsize=None)
    def rw(c):
        match c:
            case Assign(x, e):
                if env[x] not in exp_types(e):
                    return frozenset()
                return close_rw({(env[x], r) for r in LEVELS})
            case Seq(c1, c2):
                return close_rw({(min(w1, w2), max(r1, r2))
                                 for w1, r1 in rw(c1) for w2, r2 in rw(c2) if r1 <= w2})
            case Par(c1, c2):
                return close_rw(rw(c1) & rw(c2))
            case If(t, c1, c2):
                out = set()
                for l0 in exp_types(t):
                    for w, r in rw(c1) & rw(c2):
                        if l0 <= w:
                            k = max(l0, r)
                            if system is MB and no_while(c1) and no_while(c2):
                                k = LO
                            out.add((w, k))
                return close_rw(out)
            case While(t, body):
                out = set()
                if while_prime:
                    for l0 in exp_types(t):
                        for w, r in rw(body):
                            if max(l0, r) <= w:
                                out.add((w, max(l0, r)))
                else:
                    for w, r in rw(body):
                        if r in exp_types(t) and r <= w:
                            out.add((w, r))
                return close_rw(out)

    return vs if system in (VS1, VS2) else rw


def characterized(info: Analysis, system):
    if not info.safe(system):
        return frozenset()
    if system in (VS1, VS2):
        return frozenset(l for l in LEVELS if l <= info.max_tp1)
    min_r = info.min_rtp if system is BC else info.min_trtp
    return frozenset((w, r) for w, r in PAIRS if w <= info.max_wtp and min_r <= r)


# -- fixed examples -------------------------------------------------------------

IF_HIGH = If(H0, a("h", 1), a("h", 2))
LOOP_HIGH = While(H0, a("h", "h"))
MIXED = Seq(IF_HIGH, a("l", 1))


class TestAnalyzeExamples:
    def test_leak(self):
        info = analyze(a("l", "h"), ENV)
        assert not any(info.safe(s) for s in SystemId)

    def test_high_loop(self):
        info = analyze(LOOP_HIGH, ENV)
        assert info.max_tp1 == LO  # the loop clause fixes maxTp1 at lo
        assert not info.safe1 and info.safe3

    def test_high_branch_then_low(self):
        info = analyze(MIXED, ENV)
        assert info.safe1 and not info.safe3 and info.safe4

    def test_upgrade(self):
        info = analyze(a("h", "l"), ENV)
        assert all(info.safe(s) for s in SystemId)
        assert info.max_tp1 == HI

    def test_flags(self):
        info = analyze(IF_HIGH, ENV)
        assert info.fhigh and info.high and not info.low_cmd and info.wlow
        assert info.no_while_flag
        loop = analyze(LOOP_HIGH, ENV)
        assert not loop.fhigh and loop.high and not loop.wlow

    def test_assign_reads_nothing(self):
        info = analyze(a("l", "l2"), ENV)
        assert info.min_rtp == LO and info.min_trtp == LO

    def test_if_termination_read_with_loop(self):
        c = If(H0, LOOP_HIGH, a("h", 0))
        info = analyze(c, ENV)
        assert info.min_trtp == HI and info.min_rtp == HI

    def test_unknown_variable(self):
        with pytest.raises(KeyError):
            analyze(a("z", 0), ENV)


class TestDerivSets:
    def test_vs_examples(self):
        assert deriv_set_vs(a("h", 1), ENV, VS1) == {LO, HI}
        assert deriv_set_vs(a("l", "h"), ENV, VS1) == frozenset()
        assert deriv_set_vs(IF_HIGH, ENV, VS2) == frozenset()
        assert deriv_set_vs(IF_HIGH, ENV, VS1) == {LO, HI}

    def test_rw_examples(self):
        assert deriv_set_rw(a("h", 1), ENV, BC) == ALL_PAIRS
        assert deriv_set_rw(a("l", "h"), ENV, BC) == frozenset()
        assert deriv_set_rw(LOOP_HIGH, ENV, BC) == {(LO, HI), (HI, HI)}

    def test_wrong_system(self):
        with pytest.raises(ValueError):
            deriv_set_vs(a("h", 1), ENV, BC)
        with pytest.raises(ValueError):
            deriv_set_rw(a("h", 1), ENV, VS1)

    def test_oracle_fixed_values(self):
        assert make_oracle(ENV, BC)(LOOP_HIGH) == {(LO, HI), (HI, HI)}
        assert make_oracle(ENV, MB)(MIXED) == {(LO, LO), (LO, HI)}
        assert make_oracle(ENV, VS1)(MIXED) == {LO}

    @settings(max_examples=200, deadline=None)
    @given(cmds())
    def test_closed_under_subtyping(self, c):
        for s in (VS1, VS2):
            d = deriv_set_vs(c, ENV, s)
            assert close_vs(d) == d
        for s in (BC, MB):
            d = deriv_set_rw(c, ENV, s)
            assert close_rw(d) == d


class TestLemmaEquivalence:
    def test_report_examples(self):
        rep = check_lemma_equiv(a("l", "h"), ENV)
        assert all(r.agree and not r.derived and not r.characterized for r in rep.values())
        rep = check_lemma_equiv(a("h", "l"), ENV)
        assert rep[VS1].derived == rep[VS1].characterized == {LO, HI}
        assert rep[VS1].witness == frozenset()

    def test_corpus_size_three_against_independent_oracle(self):
        oracles = {s: make_oracle(CORPUS_ENV, s) for s in SystemId}
        prime = make_oracle(CORPUS_ENV, BC, while_prime=True)
        cache = {}
        for c in corpus(3):
            info = analyze(c, CORPUS_ENV, cache)
            for s in SystemId:
                want = oracles[s](c)
                assert characterized(info, s) == want, (s, c)
                got = deriv_set_vs(c, CORPUS_ENV, s) if s in (VS1, VS2) else \
                    deriv_set_rw(c, CORPUS_ENV, s)
                assert got == want, (s, c)
            assert prime(c) == oracles[BC](c)

    @settings(max_examples=300, deadline=None)
    @given(cmds())
    def test_random_against_independent_oracle(self, c):
        info = analyze(c, ENV)
        for s in SystemId:
            assert characterized(info, s) == make_oracle(ENV, s)(c)
        assert deriv_set_rw(c, ENV, BC, while_prime=True) == deriv_set_rw(c, ENV, BC)

    def test_seeded_random(self):
        for c in seeded_cmds(300, seed=3):
            assert all(r.agree for r in check_lemma_equiv(c, CORPUS_ENV).values())


class TestIdentities:
    @settings(max_examples=400, deadline=None)
    @given(cmds())
    def test_chain(self, c):
        info = analyze(c, ENV)
        assert info.safe1 == (info.safe4 and info.wlow)
        assert not info.safe2 or info.safe1
        assert not info.safe1 or info.safe4
        assert not info.safe3 or info.safe4
        assert info.min_trtp <= info.min_rtp
        assert info.max_tp1 <= info.max_wtp

    def test_analysis_is_cached_per_subterm(self):
        cache = {}
        analyze(MIXED, ENV, cache)
        assert IF_HIGH in cache and cache[IF_HIGH] == analyze(IF_HIGH, ENV)


class TestFirstFailure:
    def test_accepted(self):
        assert first_failure(a("h", "l"), ENV, VS1) is None
        assert describe_failure(a("h", "l"), ENV, VS1) is None

    def test_innermost(self):
        c = parse_cmd("h := 1; if l = 0 then l := 0 else { h := 0 || l := h } fi", ENV)
        assert first_failure(c, ENV, VS1) == ("second/else/right", a("l", "h"))
        assert describe_failure(c, ENV, VS1) == "second/else/right: l := h"

    def test_root_clause(self):
        # both halves are fine; the composition itself is not
        assert first_failure(MIXED, ENV, BC) == ("", MIXED)

    def test_while_body(self):
        c = While(BoolConst(True), Par(a("h", 0), a("l", "h")))
        assert first_failure(c, ENV, VS2)[0] == "body/right"
