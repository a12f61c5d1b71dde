from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicheck import _kernel
from nicheck.lang import (HI, LO, And, Assign, BinOp, BoolConst, Cmp, If, IntConst, Not,
                          Par, Seq, Var, While, parse_cmd, subterms)
from nicheck.semantics import (CapExceeded, Config, RelationTooLarge, SecBisimMode, State,
                               StateSpace, all_states, build_lts, check_lts, check_modes,
                               cpt_atom, cpt_test, discr, eval_aexp, eval_bexp, explore,
                               low_equiv, may_terminate, pres_atom, relation, secure, step)

from conftest import SMALL_ENV, cmds, seeded_cmds

STRONG, ZO, WEAK, WEAKT = (SecBisimMode.STRONG, SecBisimMode.ZERO_ONE,
                           SecBisimMode.WEAK, SecBisimMode.WEAK_T)
MODES = (STRONG, ZO, WEAK, WEAKT)
ENV3 = {"l": LO, "l2": LO, "h": HI}


def a(x, v):
    return Assign(x, IntConst(v) if isinstance(v, int) else Var(v))


def h_eq(v):
    return Cmp("=", Var("h"), IntConst(v))


def s4(**store):
    return State.of(store, 4)


class TestEval:
    def test_arith(self):
        assert eval_aexp(BinOp("+", Var("l"), IntConst(3)), s4(l=2)) == 1
        assert eval_aexp(BinOp("-", IntConst(0), IntConst(1)), s4(l=0)) == 3
        assert eval_aexp(Var("h"), s4(h=0)) == 0
        assert eval_aexp(BinOp("*", Var("l"), Var("l")), s4(l=3)) == 1

    def test_tests(self):
        assert eval_bexp(Cmp("<", Var("l"), IntConst(2)), s4(l=1))
        assert not eval_bexp(Not(BoolConst(True)), s4(l=0))
        both = And(h_eq(0), Cmp("=", Var("l"), IntConst(0)))
        assert not eval_bexp(both, s4(h=0, l=1))

    def test_comparison_uses_reduced_values(self):
        # 5 mod 4 = 1 < 2
        assert eval_bexp(Cmp("<", BinOp("+", Var("l"), IntConst(4)), IntConst(2)), s4(l=1))

    def test_unknown_variable(self):
        with pytest.raises(KeyError):
            eval_aexp(Var("z"), s4(l=0))

    def test_state_bounds(self):
        with pytest.raises(ValueError):
            State(("l",), (4,), 4)
        with pytest.raises(ValueError):
            State(("l",), (0,), 1)


class TestStep:
    def test_assign(self):
        s = State.of({"l": 0}, 2)
        assert step(Config(a("l", 1), s)) == (Config(None, State.of({"l": 1}, 2)),)

    def test_par_interleaves(self):
        s = State.of({"l": 0}, 4)
        out = step(Config(Par(a("l", 1), a("l", 2)), s))
        assert len(out) == 2
        assert all(c.residual is not None for c in out)

    def test_while_unfolds(self):
        body = a("h", "h")
        loop = While(BoolConst(True), body)
        s = State.of({"h": 0}, 2)
        assert step(Config(loop, s)) == (Config(Seq(body, loop), s),)

    def test_while_exit_and_if_branch(self):
        s = State.of({"h": 1}, 2)
        assert step(Config(While(h_eq(0), a("h", 0)), s)) == (Config(None, s),)
        assert step(Config(If(h_eq(0), a("h", 0), a("h", 1)), s)) == (Config(a("h", 1), s),)

    def test_seq_and_par_collapse(self):
        s = State.of({"l": 0, "h": 0}, 2)
        (nxt,) = step(Config(Seq(a("l", 1), a("h", 1)), s))
        assert nxt.residual == a("h", 1)
        first, second = step(Config(Par(a("l", 1), a("h", 1)), s))
        assert first.residual == a("h", 1) and second.residual == a("l", 1)

    def test_terminated_has_no_successors(self):
        assert step(Config(None, State.of({"l": 0}, 2))) == ()

    def test_duplicates_merged(self):
        s = State.of({"l": 0}, 2)
        assert len(step(Config(Par(a("l", 1), a("l", 1)), s))) == 1


def naive_graph(c, env, m):
    """Breadth-first closure over :func:`step` on configuration objects."""
    start = [Config(c, s) for s in all_states(env, m)]
    seen = set(start)
    edges = {}
    todo = deque(start)
    while todo:
        cfg = todo.popleft()
        edges[cfg] = frozenset(step(cfg))
        for nxt in edges[cfg]:
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return start, edges


class TestLts:
    def test_single_assignment(self):
        # both starts end in the same configuration (terminated, l=1)
        lts = build_lts(a("l", 1), {"l": LO}, 2)
        assert len(lts) == 3
        assert len(lts.initials) == 2
        assert sum(lts.terminated(i) for i in range(len(lts))) == 1

    def test_divergent_loop(self):
        lts = build_lts(While(BoolConst(True), a("h", "h")), {"h": HI}, 2)
        assert not any(lts.terminated(i) for i in range(len(lts)))
        assert all(lts.succ[i] for i in range(len(lts)))

    def test_node_bound(self):
        c = parse_cmd("while l < h do { l := l + 1 || h := h - 1 } od", ENV3)
        lts = build_lts(c, ENV3, 2)
        residuals = {cfg.residual for cfg in lts.nodes if cfg.residual is not None}
        assert len(lts) <= 8 * (len(residuals) + 1)

    @settings(max_examples=80, deadline=None)
    @given(cmds(SMALL_ENV, max_leaves=5))
    def test_matches_naive_closure(self, c):
        start, edges = naive_graph(c, SMALL_ENV, 2)
        lts = build_lts(c, SMALL_ENV, 2)
        assert [lts.nodes[i] for i in lts.initials] == start
        assert lts.edges == edges
        assert lts.n_edges == sum(len(v) for v in edges.values())

    def test_shared_space_gives_same_graph(self):
        space = StateSpace(ENV3, 2)
        for c in seeded_cmds(40, seed=11, depth=4):
            assert explore(space, c).edges == build_lts(c, ENV3, 2).edges

    def test_cap(self):
        with pytest.raises(CapExceeded):
            build_lts(a("l", 1), {"l": LO, "h": HI}, 2, cap=3)
        c = While(BoolConst(True), a("l", BinOp("+", Var("l"), IntConst(1))))
        with pytest.raises(CapExceeded):
            build_lts(c, {"l": LO}, 8, cap=10)


class TestLowEquiv:
    def test_examples(self):
        env = {"l": LO, "h": HI}
        s = State.of({"l": 0, "h": 0}, 2)
        assert low_equiv(s, State.of({"l": 0, "h": 1}, 2), env)
        assert not low_equiv(s, State.of({"l": 1, "h": 0}, 2), env)
        assert low_equiv(s, s, env)

    def test_domain_mismatch(self):
        with pytest.raises(ValueError):
            low_equiv(State.of({"l": 0}, 2), State.of({"l": 0}, 3), {"l": LO})


# -- naive greatest-fixpoint reference -------------------------------------------

def reach(edges, x):
    seen, todo = {x}, [x]
    while todo:
        for y in edges[todo.pop()]:
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return seen


def reference_relation(lts, mode):
    """Jacobi iteration with Python sets over node indices."""
    n = len(lts)
    S = lts.space.n_states
    low = [lts.space.low_class[q % S] for q in lts.codes]
    term = [lts.terminated(i) for i in range(n)]
    succ = {i: set(lts.succ[i]) for i in range(n)}
    rch = {i: reach(succ, i) for i in range(n)}
    match = {STRONG: succ, ZO: {i: succ[i] | {i} for i in range(n)},
             WEAK: rch, WEAKT: rch}[mode]

    def clause(R, x, y):
        if mode is STRONG and term[x] != term[y]:
            return False
        if mode is WEAKT and term[x]:
            if not any(term[z] and (x, z) in R for z in rch[y]):
                return False
        return all(any((x2, y2) in R for y2 in match[y]) for x2 in succ[x])

    R = {(x, y) for x in range(n) for y in range(n) if low[x] == low[y]}
    rounds = {p: 0 for p in R}
    k = 0
    while True:
        k += 1
        keep = {(x, y) for x, y in R if clause(R, x, y) and clause(R, y, x)}
        if keep == R:
            return R, rounds
        for p in R - keep:
            rounds[p] = k
        R = keep


def kernel_pairs(lts, mode):
    R = relation(lts, mode)
    n = len(lts)
    return {(x, y) for x in range(n) for y in range(n)
            if R[x, y >> 6] >> np.uint64(y & 63) & np.uint64(1)}


class TestRefinement:
    @settings(max_examples=60, deadline=None)
    @given(cmds(SMALL_ENV, max_leaves=5), st.sampled_from(MODES), st.sampled_from([2, 3]))
    def test_kernel_matches_reference(self, c, mode, m):
        lts = build_lts(c, SMALL_ENV, m)
        ref, ref_rounds = reference_relation(lts, mode)
        assert kernel_pairs(lts, mode) == ref
        n = len(lts)
        rounds = _kernel.refine_rounds(n, *lts.arrays(), _kernel.MODES[list(MODES).index(mode)])
        for x in range(n):
            for y in range(n):
                assert rounds[x, y] == ref_rounds.get((x, y), -1)

    def test_relation_symmetric_and_low(self):
        c = parse_cmd("{ while h = 0 do h := h od || l := 1 }; l2 := l", ENV3)
        lts = build_lts(c, ENV3, 2)
        for mode in MODES:
            pairs = kernel_pairs(lts, mode)
            assert all((y, x) in pairs for x, y in pairs)
            S = lts.space.n_states
            low = lts.space.low_class
            assert all(low[lts.codes[x] % S] == low[lts.codes[y] % S] for x, y in pairs)

    def test_relation_guard(self, monkeypatch):
        import nicheck.semantics as sem
        monkeypatch.setattr(sem, "RELATION_BYTES", 64)
        lts = build_lts(a("l", 1), {"l": LO, "h": HI}, 4)
        with pytest.raises(RelationTooLarge):
            check_lts(lts, WEAK)


class TestSecure:
    def test_direct_leak(self):
        for mode in MODES:
            v = secure(a("l", "h"), SMALL_ENV, 2, mode)
            assert not v.secure
            cex = v.counterexample
            s, t = cex.initial
            assert {s.state["h"], t.state["h"]} == {0, 1}

    def test_upgrade(self):
        assert all(secure(a("h", "l"), SMALL_ENV, 2, m).secure for m in MODES)

    def test_high_loop(self):
        c = While(h_eq(0), a("h", "h"))
        got = {m: secure(c, SMALL_ENV, 2, m).secure for m in MODES}
        assert got == {STRONG: False, ZO: True, WEAK: True, WEAKT: False}

    def test_step_witness_replays(self):
        v = secure(Seq(a("h", "h"), a("l", "h")), SMALL_ENV, 2, WEAK)
        cex = v.counterexample
        assert cex.reason == "step"
        assert cex.step_target in step(cex.left)
        assert "unmatched step" in cex.describe()

    @pytest.mark.parametrize("mode", MODES)
    def test_witnesses_are_consistent(self, mode):
        for c in seeded_cmds(60, seed=2, depth=4):
            v = check_lts(build_lts(c, ENV3, 2), mode)
            if v.secure:
                continue
            cex = v.counterexample
            s, t = cex.initial
            assert low_equiv(s.state, t.state, ENV3) and s.residual == t.residual == c
            assert low_equiv(cex.left.state, cex.right.state, ENV3)
            if cex.reason == "step":
                assert cex.step_target in step(cex.left)
            else:
                assert mode in (STRONG, WEAKT) and cex.left.terminated

    def test_timing_leak_only_strong(self):
        c = If(h_eq(0), a("h", 1), Seq(a("h", 1), a("h", 1)))
        got = {m: secure(c, SMALL_ENV, 2, m).secure for m in MODES}
        assert got == {STRONG: False, ZO: True, WEAK: True, WEAKT: True}

    def test_verdict_invariant(self):
        from nicheck.semantics import Verdict
        with pytest.raises(ValueError):
            Verdict(WEAK, False, 3)

    def test_witness_flag_keeps_verdict(self):
        for c in seeded_cmds(30, seed=5, depth=4):
            lts = build_lts(c, ENV3, 2)
            full = check_modes(lts, MODES)
            quick = check_modes(lts, MODES, witness=False)
            assert {m: v.secure for m, v in full.items()} == \
                {m: v.secure for m, v in quick.items()}

    @settings(max_examples=150, deadline=None)
    @given(cmds(SMALL_ENV, max_leaves=6))
    def test_mode_chain(self, c):
        v = {m: r.secure for m, r in check_modes(build_lts(c, SMALL_ENV, 2), MODES).items()}
        assert not v[STRONG] or v[WEAKT]
        assert not v[WEAKT] or v[WEAK]
        assert not v[ZO] or v[WEAK]


def run(c, s):
    """Big-step execution of a deterministic loop-free command."""
    match c:
        case Assign(x, e):
            return s.assign(x, eval_aexp(e, s))
        case Seq(c1, c2):
            return run(c2, run(c1, s))
        case If(t, c1, c2):
            return run(c1 if eval_bexp(t, s) else c2, s)
    raise ValueError("not loop-free and sequential")


def sequential(c):
    return not any(isinstance(s, (While, Par)) for s in subterms(c))


class TestEndToEnd:
    @settings(max_examples=200, deadline=None)
    @given(cmds(SMALL_ENV, max_leaves=5).filter(sequential))
    def test_secure_implies_final_low_agreement(self, c):
        states = all_states(SMALL_ENV, 2)
        agree = all(low_equiv(run(c, s), run(c, t), SMALL_ENV)
                    for s in states for t in states if low_equiv(s, t, SMALL_ENV))
        verdicts = check_modes(build_lts(c, SMALL_ENV, 2), MODES)
        for v in verdicts.values():
            assert agree or not v.secure

    def test_intermediate_low_write_is_observable(self):
        # same final store, but one side shows l = 1 on the way
        c = If(h_eq(0), Seq(a("l", 1), a("l", 0)), a("l", 0))
        env = {"l": LO, "h": HI}
        assert all(low_equiv(run(c, s), run(c, t), env)
                   for s in all_states(env, 2) for t in all_states(env, 2)
                   if s["l"] == 0 and t["l"] == 0)
        assert not secure(c, env, 2, WEAK).secure


class TestPredicates:
    def test_discr(self):
        env = {"l": LO, "h": HI}
        assert discr(Assign("h", BinOp("+", Var("h"), IntConst(1))), env, 2)
        assert not discr(a("l", 0), env, 2)
        assert discr(Seq(a("h", 1), a("h", 0)), env, 2)

    def test_may_terminate(self):
        env = {"l": LO, "h": HI}
        assert not may_terminate(While(BoolConst(True), a("h", "h")), env, 2)
        assert may_terminate(a("l", 0), env, 2)
        c = If(h_eq(0), a("h", 1), While(BoolConst(True), a("h", "h")))
        assert not may_terminate(c, env, 2)

    def test_may_terminate_some_path(self):
        # one interleaving exits the loop
        c = Par(While(h_eq(0), a("h", "h")), a("h", 1))
        assert may_terminate(c, {"h": HI}, 2)

    def test_cpt_test(self):
        assert cpt_test(Cmp("<", Var("l"), IntConst(2)), SMALL_ENV, 2)
        assert not cpt_test(h_eq(0), SMALL_ENV, 2)
        assert cpt_test(BoolConst(True), SMALL_ENV, 2)

    def test_cpt_atom(self):
        assert not cpt_atom(a("l", "h"), SMALL_ENV, 2)
        assert cpt_atom(a("h", "l"), SMALL_ENV, 2)
        assert cpt_atom(a("l", 1), SMALL_ENV, 2)

    def test_pres_atom(self):
        assert pres_atom(a("h", "l"), SMALL_ENV, 2)
        assert not pres_atom(a("l", 0), SMALL_ENV, 2)
        assert pres_atom(a("l", "l"), SMALL_ENV, 2)

    def test_atoms_only(self):
        with pytest.raises(TypeError):
            cpt_atom(Seq(a("h", 1), a("h", 1)), SMALL_ENV, 2)
        with pytest.raises(TypeError):
            pres_atom(Seq(a("h", 1), a("h", 1)), SMALL_ENV, 2)
