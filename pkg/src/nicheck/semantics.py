"""Small-step interleaving semantics over bounded integer stores, finite
configuration graphs, and security bisimilarity checking.

Values live in ``[0, m)`` and arithmetic wraps modulo ``m``, so every
configuration graph is finite and all checks below are exact decisions.

Granularity: an assignment is one step; evaluating the guard of ``If`` or
``While`` is one step; ``Par`` interleaves its branches and collapses to the
surviving branch in the same step that the other one terminates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lang import (LO, And, Assign, BExp, BinOp, BoolConst, Cmd, Cmp, If,
                   IntConst, NicheckError, Not, Or, Par, SecEnv, Seq,
                   UnknownVariableError, Var, While, AExp, vars_of)
from . import _kernel

DEFAULT_CAP = 1_000_000


class CapExceeded(NicheckError):
    def __init__(self, cap: int):
        super().__init__(f"configuration graph exceeds the node cap of {cap}")
        self.cap = cap


class RelationTooLarge(NicheckError):
    """The graph fits under the node cap but its pair relation does not fit
    in memory."""

    def __init__(self, nodes: int, limit: int):
        super().__init__(f"relation over {nodes} nodes needs more than {limit >> 20} MiB")
        self.nodes = nodes
        self.limit = limit


# Bit rows for the relation, the match sets and the reachability closure.
RELATION_BYTES = 2 << 30


def _check_relation_size(n: int) -> None:
    if 3 * n * ((n + 63) >> 6) * 8 > RELATION_BYTES:
        raise RelationTooLarge(n, RELATION_BYTES)


# -- states and evaluation ----------------------------------------------------

@dataclass(frozen=True)
class State:
    """A store over a fixed, sorted set of variables with values in ``[0, modulus)``."""

    names: tuple[str, ...]
    values: tuple[int, ...]
    modulus: int

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError("modulus must be >= 2")
        if len(self.names) != len(self.values):
            raise ValueError("names and values differ in length")
        if any(not 0 <= v < self.modulus for v in self.values):
            raise ValueError(f"store values must lie in [0, {self.modulus})")

    @classmethod
    def of(cls, store: Mapping[str, int], modulus: int) -> "State":
        names = tuple(sorted(store))
        return cls(names, tuple(store[x] % modulus for x in names), modulus)

    def __getitem__(self, name: str) -> int:
        try:
            return self.values[self.names.index(name)]
        except ValueError:
            raise UnknownVariableError(name) from None

    def as_dict(self) -> dict[str, int]:
        return dict(zip(self.names, self.values))

    def assign(self, name: str, value: int) -> "State":
        i = self.names.index(name)
        return State(self.names, self.values[:i] + (value % self.modulus,) + self.values[i + 1:],
                     self.modulus)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{x}={v}" for x, v in zip(self.names, self.values)) + "}"


def all_states(names: Iterable[str], modulus: int) -> list[State]:
    names = tuple(sorted(names))
    return [State(names, vals, modulus) for vals in product(range(modulus), repeat=len(names))]


def eval_aexp(e: AExp, s: State) -> int:
    m = s.modulus
    match e:
        case IntConst(v):
            return v % m
        case Var(x):
            return s[x]
        case BinOp("+", a, b):
            return (eval_aexp(a, s) + eval_aexp(b, s)) % m
        case BinOp("-", a, b):
            return ((eval_aexp(a, s) - eval_aexp(b, s)) % m + m) % m
        case BinOp("*", a, b):
            return (eval_aexp(a, s) * eval_aexp(b, s)) % m
    raise TypeError(f"not an arithmetic expression: {e!r}")


def eval_bexp(b: BExp, s: State) -> bool:
    match b:
        case BoolConst(v):
            return v
        case Cmp(op, x, y):
            u, v = eval_aexp(x, s), eval_aexp(y, s)
            if op == "=":
                return u == v
            if op == "<":
                return u < v
            if op == "<=":
                return u <= v
        case Not(a):
            return not eval_bexp(a, s)
        case And(x, y):
            return eval_bexp(x, s) and eval_bexp(y, s)
        case Or(x, y):
            return eval_bexp(x, s) or eval_bexp(y, s)
    raise TypeError(f"not a test: {b!r}")


def low_equiv(s: State, t: State, env: SecEnv) -> bool:
    """``s`` and ``t`` agree on every low variable."""
    if s.names != t.names or s.modulus != t.modulus:
        raise ValueError("states have different domains or moduli")
    for x, u, v in zip(s.names, s.values, t.values):
        if env[x] == LO and u != v:
            return False
    return True


# -- configurations and steps -------------------------------------------------

@dataclass(frozen=True)
class Config:
    """``residual is None`` marks a terminated configuration."""

    residual: Cmd | None
    state: State

    @property
    def terminated(self) -> bool:
        return self.residual is None

    def __str__(self) -> str:
        from .lang import pretty_cmd
        what = "<terminated>" if self.residual is None else pretty_cmd(self.residual)
        return f"({what}, {self.state})"


def _dedup(cfgs: Iterable[Config]) -> tuple[Config, ...]:
    return tuple(dict.fromkeys(cfgs))


def step(cfg: Config) -> tuple[Config, ...]:
    """All successors of ``cfg``, duplicate-free, in a fixed order.

    Left-branch moves of ``Par`` come before right-branch moves.
    """
    c, s = cfg.residual, cfg.state
    match c:
        case None:
            return ()
        case Assign(x, e):
            return (Config(None, s.assign(x, eval_aexp(e, s))),)
        case Seq(a, b):
            return _dedup(Config(b if n.residual is None else Seq(n.residual, b), n.state)
                          for n in step(Config(a, s)))
        case If(t, a, b):
            return (Config(a if eval_bexp(t, s) else b, s),)
        case While(t, body):
            return (Config(Seq(body, c) if eval_bexp(t, s) else None, s),)
        case Par(a, b):
            left = (Config(b if n.residual is None else Par(n.residual, b), n.state)
                    for n in step(Config(a, s)))
            right = (Config(a if n.residual is None else Par(a, n.residual), n.state)
                     for n in step(Config(b, s)))
            return _dedup((*left, *right))
    raise TypeError(f"not a command: {c!r}")


# -- compiled state space ------------------------------------------------------

class StateSpace:
    """Interned residual commands with per-state transition tables.

    A configuration is encoded as ``rid * n_states + state_index`` where
    residual id 0 stands for termination.  State indices enumerate stores in
    lexicographic order of their value tuples (variables sorted by name).
    Instances are caches: reuse one across many commands over the same
    variables and modulus, and call :meth:`reset` to bound memory.
    """

    def __init__(self, env: SecEnv, modulus: int):
        if modulus < 2:
            raise ValueError("modulus must be >= 2")
        self.env = dict(env)
        self.modulus = modulus
        self.names = tuple(sorted(env))
        self.states = all_states(self.names, modulus)
        self.n_states = len(self.states)
        low = [i for i, x in enumerate(self.names) if env[x] == LO]
        self.low_class = [sum(st.values[i] * modulus ** j for j, i in enumerate(low))
                          for st in self.states]
        self.low_array = np.array(self.low_class, dtype=np.int64)
        self._index = {st.values: i for i, st in enumerate(self.states)}
        self.reset()

    def reset(self) -> None:
        self._aexp: dict = {}
        self._bexp: dict = {}
        self._assign: dict = {}
        self._keys: list = [None]
        self._ids: dict = {}
        self._trans: list = [()]
        self._cmd_ids: dict = {}

    @property
    def size(self) -> int:
        """Number of interned residuals."""
        return len(self._keys)

    def state_index(self, s: State) -> int:
        if s.names != self.names or s.modulus != self.modulus:
            raise ValueError("state does not belong to this state space")
        return self._index[s.values]

    def _test_table(self, b: BExp) -> tuple[bool, ...]:
        tab = self._bexp.get(b)
        if tab is None:
            self._check_vars(b)
            tab = self._bexp[b] = tuple(eval_bexp(b, st) for st in self.states)
        return tab

    def _assign_table(self, x: str, e: AExp) -> tuple[int, ...]:
        key = (x, e)
        tab = self._assign.get(key)
        if tab is None:
            self._check_vars(e)
            if x not in self.env:
                raise UnknownVariableError(x)
            idx = self._index
            tab = self._assign[key] = tuple(idx[st.assign(x, eval_aexp(e, st)).values]
                                            for st in self.states)
        return tab

    def _check_vars(self, node) -> None:
        for x in vars_of(node):
            if x not in self.env:
                raise UnknownVariableError(x)

    def _intern(self, key) -> int:
        rid = self._ids.get(key)
        if rid is None:
            rid = self._ids[key] = len(self._keys)
            self._keys.append(key)
            self._trans.append(None)
        return rid

    def cmd_id(self, c: Cmd) -> int:
        rid = self._cmd_ids.get(c)
        if rid is None:
            match c:
                case Assign(x, e):
                    key = ("A", x, e)
                case Seq(a, b):
                    key = ("S", self.cmd_id(a), self.cmd_id(b))
                case If(t, a, b):
                    key = ("I", t, self.cmd_id(a), self.cmd_id(b))
                case While(t, a):
                    key = ("W", t, self.cmd_id(a))
                case Par(a, b):
                    key = ("P", self.cmd_id(a), self.cmd_id(b))
                case _:
                    raise TypeError(f"not a command: {c!r}")
            rid = self._cmd_ids[c] = self._intern(key)
        return rid

    def cmd_of(self, rid: int) -> Cmd | None:
        key = self._keys[rid]
        match key:
            case None:
                return None
            case ("A", x, e):
                return Assign(x, e)
            case ("S", a, b):
                return Seq(self.cmd_of(a), self.cmd_of(b))
            case ("I", t, a, b):
                return If(t, self.cmd_of(a), self.cmd_of(b))
            case ("W", t, a):
                return While(t, self.cmd_of(a))
            case ("P", a, b):
                return Par(self.cmd_of(a), self.cmd_of(b))
        raise AssertionError(key)

    def config(self, q: int) -> Config:
        rid, s = divmod(q, self.n_states)
        return Config(self.cmd_of(rid), self.states[s])

    def encode(self, cfg: Config) -> int:
        rid = 0 if cfg.residual is None else self.cmd_id(cfg.residual)
        return rid * self.n_states + self.state_index(cfg.state)

    def successors(self, q: int) -> tuple[int, ...]:
        rid, s = divmod(q, self.n_states)
        if rid == 0:
            return ()
        table = self._trans[rid]
        if table is None:
            table = self._trans[rid] = self._compute(rid)
        return table[s]

    def _compute(self, rid: int) -> tuple[tuple[int, ...], ...]:
        S = self.n_states
        key = self._keys[rid]
        match key:
            case ("A", x, e):
                return tuple((q,) for q in self._assign_table(x, e))
            case ("S", a, b):
                out = []
                for s in range(S):
                    nxt = []
                    for q in self.successors(a * S + s):
                        r, s2 = divmod(q, S)
                        nxt.append((b if r == 0 else self._intern(("S", r, b))) * S + s2)
                    out.append(tuple(dict.fromkeys(nxt)))
                return tuple(out)
            case ("I", t, a, b):
                tab = self._test_table(t)
                return tuple(((a if tab[s] else b) * S + s,) for s in range(S))
            case ("W", t, a):
                tab = self._test_table(t)
                unfold = self._intern(("S", a, rid))
                return tuple(((unfold * S + s) if tab[s] else s,) for s in range(S))
            case ("P", a, b):
                out = []
                for s in range(S):
                    nxt = []
                    for q in self.successors(a * S + s):
                        r, s2 = divmod(q, S)
                        nxt.append((b if r == 0 else self._intern(("P", r, b))) * S + s2)
                    for q in self.successors(b * S + s):
                        r, s2 = divmod(q, S)
                        nxt.append((a if r == 0 else self._intern(("P", a, r))) * S + s2)
                    out.append(tuple(dict.fromkeys(nxt)))
                return tuple(out)
        raise AssertionError(key)


@dataclass
class Lts:
    """Finite configuration graph closed under :func:`step`.

    Node ``i`` is ``space.config(codes[i])``; its successor node indices are
    ``indices[indptr[i]:indptr[i + 1]]`` and ``initials[j]`` is the node of
    ``(c, space.states[j])``.
    """

    space: StateSpace
    codes: list[int]
    indptr: list[int]
    indices: list[int]
    initials: list[int]
    _nodes: list[Config] | None = field(default=None, repr=False)
    _succ: list[tuple[int, ...]] | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def succ(self) -> list[tuple[int, ...]]:
        if self._succ is None:
            ptr, ind = self.indptr, self.indices
            self._succ = [tuple(ind[ptr[i]:ptr[i + 1]]) for i in range(len(self.codes))]
        return self._succ

    @property
    def nodes(self) -> list[Config]:
        if self._nodes is None:
            self._nodes = [self.space.config(q) for q in self.codes]
        return self._nodes

    @property
    def edges(self) -> dict[Config, frozenset[Config]]:
        nodes = self.nodes
        return {nodes[i]: frozenset(nodes[j] for j in js) for i, js in enumerate(self.succ)}

    @property
    def n_edges(self) -> int:
        return len(self.indices)

    def terminated(self, i: int) -> bool:
        return self.codes[i] < self.space.n_states

    def state_of(self, i: int) -> int:
        return self.codes[i] % self.space.n_states

    def arrays(self):
        """CSR successor arrays plus per-node low class and termination flag."""
        S = self.space.n_states
        codes = np.array(self.codes, dtype=np.int64)
        indptr = np.array(self.indptr, dtype=np.int64)
        indices = np.array(self.indices, dtype=np.int64)
        low = self.space.low_array[codes % S]
        return indptr, indices, low, codes < S


def explore(space: StateSpace, c: Cmd, cap: int = DEFAULT_CAP) -> Lts:
    """Breadth-first closure of the successor relation from every ``(c, s)``.

    The initial configurations are nodes ``0 .. n_states - 1`` in state order.
    """
    S = space.n_states
    if S > cap:
        raise CapExceeded(cap)
    root = space.cmd_id(c)
    codes = [root * S + s for s in range(S)]
    index = {q: i for i, q in enumerate(codes)}
    indptr = [0]
    indices = []
    trans = space._trans
    for q in codes:  # grows while iterating
        rid, s = divmod(q, S)
        if rid:
            table = trans[rid]
            if table is None:
                table = trans[rid] = space._compute(rid)
            for q2 in table[s]:
                j = index.get(q2)
                if j is None:
                    j = index[q2] = len(codes)
                    codes.append(q2)
                indices.append(j)
            if len(codes) > cap:
                raise CapExceeded(cap)
        indptr.append(len(indices))
    return Lts(space, codes, indptr, indices, list(range(S)))


def build_lts(c: Cmd, env: SecEnv, m: int, cap: int = DEFAULT_CAP) -> Lts:
    return explore(StateSpace(env, m), c, cap)


# -- security bisimilarity ---------------------------------------------------

class SecBisimMode(Enum):
    STRONG = "strong"
    ZERO_ONE = "zo"
    WEAK = "weak"
    WEAK_T = "weakt"

    @classmethod
    def parse(cls, name: str) -> "SecBisimMode":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown bisimulation mode {name!r}") from None


_MODE_CODE = {SecBisimMode.STRONG: _kernel.STRONG, SecBisimMode.ZERO_ONE: _kernel.ZERO_ONE,
              SecBisimMode.WEAK: _kernel.WEAK, SecBisimMode.WEAK_T: _kernel.WEAK_T}


@dataclass(frozen=True)
class Counterexample:
    """A pair removed from the relation together with the reason.

    ``reason`` is ``"step"`` when ``left -> step_target`` has no matching
    move from ``right``, or ``"termination"`` when ``left`` has terminated and
    ``right`` cannot.  ``initial`` is the pair of initial configurations it
    was reached from.
    """

    left: Config
    right: Config
    reason: str
    step_target: Config | None
    initial: tuple[Config, Config]

    def describe(self) -> str:
        a, b = self.initial
        lines = [f"initial pair: {a}  vs  {b}", f"violated pair: {self.left}  vs  {self.right}"]
        if self.reason == "step":
            lines.append(f"unmatched step: {self.left} -> {self.step_target}")
        else:
            lines.append(f"{self.left} has terminated but {self.right} cannot terminate")
        return "\n".join(lines)


@dataclass(frozen=True)
class Verdict:
    mode: SecBisimMode
    secure: bool
    lts_nodes: int
    counterexample: Counterexample | None = None

    def __post_init__(self):
        if self.secure != (self.counterexample is None):
            raise ValueError("counterexample must be present exactly when insecure")


def relation(lts: Lts, mode: SecBisimMode, arrays=None) -> np.ndarray:
    """Greatest relation for ``mode`` over the nodes of ``lts`` as bit rows."""
    _check_relation_size(len(lts))
    indptr, indices, low, term = arrays if arrays is not None else lts.arrays()
    return _kernel.refine(len(lts), indptr, indices, low, term, _MODE_CODE[mode])


def _related(R: np.ndarray, a: int, b: int) -> bool:
    return bool(R[a, b >> 6] >> np.uint64(b & 63) & np.uint64(1))


def check_lts(lts: Lts, mode: SecBisimMode, arrays=None, witness: bool = True) -> Verdict:
    """Verdict for ``mode`` on a prebuilt graph (see :func:`check_modes`)."""
    return check_modes(lts, (mode,), arrays, witness)[mode]


def check_modes(lts: Lts, modes: Sequence[SecBisimMode], arrays=None,
                witness: bool = True) -> dict[SecBisimMode, Verdict]:
    """Verdicts for several modes on one graph.

    With ``witness`` the counterexample is the earliest-removed pair reachable
    from the failing initial pair; without it, the failing initial pair
    itself is explained against the final relation (cheaper).
    """
    _check_relation_size(len(lts))
    arrays = arrays if arrays is not None else lts.arrays()
    wanted = np.zeros(4, dtype=np.bool_)
    for mode in modes:
        wanted[_MODE_CODE[mode]] = True
    fails = _kernel.first_failures(len(lts), *arrays, len(lts.initials), wanted)
    out = {}
    for mode in modes:
        code = int(fails[_MODE_CODE[mode]])
        if code < 0:
            out[mode] = Verdict(mode, True, len(lts))
        else:
            a, b = divmod(code, len(lts))
            out[mode] = Verdict(mode, False, len(lts),
                                _counterexample(lts, mode, arrays, a, b, witness))
    return out


_ROUNDS_LIMIT = 4096


def _counterexample(lts: Lts, mode: SecBisimMode, arrays, a0: int, b0: int,
                    earliest: bool) -> Counterexample:
    n = len(lts)
    if earliest and n <= _ROUNDS_LIMIT:
        rounds = _kernel.refine_rounds(n, *arrays, _MODE_CODE[mode])
        R = rounds == 0
        reach_a, reach_b = _reach(lts, a0), _reach(lts, b0)
        best = None
        for a in sorted(reach_a):
            for b in sorted(reach_b):
                for x, y in ((a, b), (b, a)):
                    r = rounds[x, y]
                    if r > 0 and (best is None or r < best[0]):
                        best = (r, x, y)
        _, a, b = best
    else:
        R = _Bits(relation(lts, mode, arrays))
        a, b = a0, b0
    a, b = _orient(lts, mode, R, a, b)
    return _explain(lts, mode, R, a, b, (a0, b0))


class _Bits:
    def __init__(self, rows):
        self.rows = rows

    def __getitem__(self, ab):
        a, b = ab
        return _related(self.rows, a, b)


def _reach(lts: Lts, start: int) -> set[int]:
    seen = {start}
    todo = [start]
    while todo:
        for j in lts.succ[todo.pop()]:
            if j not in seen:
                seen.add(j)
                todo.append(j)
    return seen


def _match_set(lts: Lts, mode: SecBisimMode, b: int) -> set[int]:
    if mode is SecBisimMode.STRONG:
        return set(lts.succ[b])
    if mode is SecBisimMode.ZERO_ONE:
        return {b, *lts.succ[b]}
    return _reach(lts, b)


def _failure(lts: Lts, mode: SecBisimMode, R, a: int, b: int):
    """Why the clause for ``(a, b)`` fails against ``R`` (``None`` if it holds)."""
    if mode is SecBisimMode.STRONG and lts.terminated(a) and not lts.terminated(b):
        return ("termination", None)
    if mode is SecBisimMode.WEAK_T and lts.terminated(a):
        if not any(lts.terminated(x) and R[a, x] for x in _reach(lts, b)):
            return ("termination", None)
    targets = _match_set(lts, mode, b)
    for a2 in lts.succ[a]:
        if not any(R[a2, x] for x in targets):
            return ("step", a2)
    return None


def _orient(lts, mode, R, a, b):
    return (a, b) if _failure(lts, mode, R, a, b) is not None else (b, a)


def _explain(lts, mode, R, a, b, initial) -> Counterexample:
    nodes = lts.nodes
    reason, target = _failure(lts, mode, R, a, b) or ("step", None)
    return Counterexample(nodes[a], nodes[b], reason,
                          None if target is None else nodes[target],
                          (nodes[initial[0]], nodes[initial[1]]))


def secure(c: Cmd, env: SecEnv, m: int, mode: SecBisimMode,
           cap: int = DEFAULT_CAP) -> Verdict:
    """Decide whether every pair ``(c, s), (c, t)`` with ``s`` and ``t``
    low-equivalent is in the greatest security bisimulation for ``mode``."""
    return check_lts(build_lts(c, env, m, cap), mode)


def secure_modes(c: Cmd, space: StateSpace, modes: Sequence[SecBisimMode],
                 cap: int = DEFAULT_CAP, witness: bool = True) -> dict[SecBisimMode, Verdict]:
    """Check several modes on one shared configuration graph."""
    return check_modes(explore(space, c, cap), modes, witness=witness)


# -- semantic predicates -------------------------------------------------------

def _lts_for(c, env, m, cap, space):
    if space is None:
        return build_lts(c, env, m, cap)
    return explore(space, c, cap)


def discr(c: Cmd, env: SecEnv, m: int, cap: int = DEFAULT_CAP,
          space: StateSpace | None = None) -> bool:
    """``c`` never changes the low part of the store, from any start state."""
    return lts_discr(_lts_for(c, env, m, cap, space))


def lts_discr(lts: Lts) -> bool:
    # every node is reachable from an initial one, so checking edges suffices
    S = lts.space.n_states
    lc = lts.space.low_class
    codes, ptr, ind = lts.codes, lts.indptr, lts.indices
    for i, q in enumerate(codes):
        base = lc[q % S]
        for j in ind[ptr[i]:ptr[i + 1]]:
            if lc[codes[j] % S] != base:
                return False
    return True


def may_terminate(c: Cmd, env: SecEnv, m: int, cap: int = DEFAULT_CAP,
                  space: StateSpace | None = None) -> bool:
    """From every start state some terminated configuration is reachable."""
    return lts_may_terminate(_lts_for(c, env, m, cap, space))


def lts_may_terminate(lts: Lts) -> bool:
    n = len(lts)
    preds: list[list[int]] = [[] for _ in range(n)]
    ptr, ind = lts.indptr, lts.indices
    for i in range(n):
        for j in ind[ptr[i]:ptr[i + 1]]:
            preds[j].append(i)
    good = [lts.terminated(i) for i in range(n)]
    todo = [i for i in range(n) if good[i]]
    while todo:
        for p in preds[todo.pop()]:
            if not good[p]:
                good[p] = True
                todo.append(p)
    return all(good[i] for i in lts.initials)


mayT = may_terminate


def _low_pairs(env: SecEnv, m: int, names: Iterable[str]):
    states = all_states(names, m)
    for s in states:
        for t in states:
            if low_equiv(s, t, env):
                yield s, t


def cpt_test(b: BExp, env: SecEnv, m: int) -> bool:
    """The test evaluates identically on every pair of low-equivalent states."""
    return all(eval_bexp(b, s) == eval_bexp(b, t) for s, t in _low_pairs(env, m, env))


def _run_atom(a: Cmd, s: State) -> State:
    if not isinstance(a, Assign):
        raise TypeError(f"not an atom: {a!r}")
    (nxt,) = step(Config(a, s))
    return nxt.state


def cpt_atom(a: Cmd, env: SecEnv, m: int) -> bool:
    """Low-equivalent states stay low-equivalent after executing ``a``."""
    if not isinstance(a, Assign):
        raise TypeError(f"not an atom: {a!r}")
    return all(low_equiv(_run_atom(a, s), _run_atom(a, t), env)
               for s, t in _low_pairs(env, m, env))


def pres_atom(a: Cmd, env: SecEnv, m: int) -> bool:
    """Executing ``a`` never changes the low part of the store."""
    if not isinstance(a, Assign):
        raise TypeError(f"not an atom: {a!r}")
    return all(low_equiv(_run_atom(a, s), s, env) for s in all_states(env, m))
