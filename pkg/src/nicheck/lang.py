"""Abstract syntax, parser, printer and syntactic utilities for the parallel
while-language.

Commands are immutable trees.  ``Assign`` is the only atom; ``Par`` is binary
and may be nested anywhere a command is allowed.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import IntEnum
from operator import attrgetter
from typing import Iterable, Iterator, Mapping, Sequence, Union


class Level(IntEnum):
    LO = 0
    HI = 1

    def __str__(self) -> str:
        return self.name.lower()


LO = Level.LO
HI = Level.HI


def leq(a: Level, b: Level) -> bool:
    return a <= b


def join(*levels: Level) -> Level:
    """Least upper bound; the empty join is ``LO``."""
    return Level(max(levels, default=LO))


def meet(*levels: Level) -> Level:
    """Greatest lower bound; the empty meet is ``HI``."""
    return Level(min(levels, default=HI))


SecEnv = Mapping[str, Level]


class NicheckError(Exception):
    pass


class UnknownVariableError(NicheckError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"unknown variable {self.name!r}"


class ParseError(NicheckError, ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


# -- syntax trees -------------------------------------------------------------
#
# Nodes cache their hash: the validation corpus hashes millions of shared
# subtrees and recursive re-hashing dominates otherwise.

class _Node:
    __slots__ = ()

    def __hash__(self) -> int:
        h = self._h
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_h", h)
        return h


def _node(cls):
    cls = dataclass(frozen=True, slots=True)(cls)
    cls.__hash__ = _Node.__hash__
    names = [f for f in cls.__dataclass_fields__ if f != "_h"]
    get = attrgetter(*names)
    cls._key = (lambda self: get(self)) if len(names) > 1 else (lambda self: (get(self),))
    return cls


@_node
class IntConst(_Node):
    value: int
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class Var(_Node):
    name: str
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class BinOp(_Node):
    op: str
    left: "AExp"
    right: "AExp"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


AExp = Union[IntConst, Var, BinOp]


@_node
class BoolConst(_Node):
    value: bool
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class Cmp(_Node):
    op: str
    left: AExp
    right: AExp
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class Not(_Node):
    arg: "BExp"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class And(_Node):
    left: "BExp"
    right: "BExp"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class Or(_Node):
    left: "BExp"
    right: "BExp"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


BExp = Union[BoolConst, Cmp, Not, And, Or]


@_node
class Assign(_Node):
    var: str
    expr: AExp
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class Seq(_Node):
    first: "Cmd"
    second: "Cmd"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class If(_Node):
    test: BExp
    then: "Cmd"
    orelse: "Cmd"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class While(_Node):
    test: BExp
    body: "Cmd"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


@_node
class Par(_Node):
    left: "Cmd"
    right: "Cmd"
    _h: int | None = field(default=None, init=False, repr=False, compare=False)


Cmd = Union[Assign, Seq, If, While, Par]

AEXP_OPS = ("+", "-", "*")
CMP_OPS = ("=", "<", "<=")


@dataclass(frozen=True)
class Program:
    sec_env: dict[str, Level]
    body: Cmd

    def __post_init__(self):
        missing = vars_of(self.body) - self.sec_env.keys()
        if missing:
            raise UnknownVariableError(sorted(missing)[0])

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.sec_env))


# -- syntactic utilities ------------------------------------------------------

def vars_of(node) -> frozenset[str]:
    """All variables read or written anywhere in ``node``."""
    match node:
        case IntConst() | BoolConst():
            return frozenset()
        case Var(name):
            return frozenset((name,))
        case BinOp(_, a, b) | Cmp(_, a, b) | And(a, b) | Or(a, b):
            return vars_of(a) | vars_of(b)
        case Not(a):
            return vars_of(a)
        case Assign(x, e):
            return vars_of(e) | {x}
        case Seq(a, b) | Par(a, b):
            return vars_of(a) | vars_of(b)
        case If(t, a, b):
            return vars_of(t) | vars_of(a) | vars_of(b)
        case While(t, a):
            return vars_of(t) | vars_of(a)
    raise TypeError(f"not a syntax node: {node!r}")


def no_while(c: Cmd) -> bool:
    match c:
        case Assign():
            return True
        case While():
            return False
        case Seq(a, b) | Par(a, b) | If(_, a, b):
            return no_while(a) and no_while(b)
    raise TypeError(f"not a command: {c!r}")


def cmd_size(c: Cmd) -> int:
    """Size used by :func:`enumerate_cmds`: atoms, ``If`` and ``While`` count
    one each, ``Seq`` and ``Par`` only glue their parts (so two atoms in
    sequence have size 2 and the smallest ``If`` has size 3)."""
    match c:
        case Assign():
            return 1
        case Seq(a, b) | Par(a, b):
            return cmd_size(a) + cmd_size(b)
        case If(_, a, b):
            return 1 + cmd_size(a) + cmd_size(b)
        case While(_, a):
            return 1 + cmd_size(a)
    raise TypeError(f"not a command: {c!r}")


def subterms(c: Cmd) -> Iterator[Cmd]:
    """Pre-order traversal of the command subterms of ``c``."""
    yield c
    match c:
        case Seq(a, b) | Par(a, b) | If(_, a, b):
            yield from subterms(a)
            yield from subterms(b)
        case While(_, a):
            yield from subterms(a)


# -- enumeration and random generation ----------------------------------------

def _dedup(items: Iterable) -> list:
    return list(dict.fromkeys(items))


def enumerate_cmds(max_nodes: int, vars: Sequence[str], expr_pool: Sequence[AExp],
                   test_pool: Sequence[BExp]) -> Iterator[Cmd]:
    """Yield every command with :func:`cmd_size` at most ``max_nodes``.

    Commands come out grouped by size, smallest first.  Subterms of the same
    size are shared objects, so per-subterm caches keyed on commands stay hot.
    """
    if max_nodes < 1:
        raise ValueError("max_nodes must be >= 1")
    vars, expr_pool, test_pool = _dedup(vars), _dedup(expr_pool), _dedup(test_pool)
    if not (vars and expr_pool and test_pool):
        raise ValueError("pools must be nonempty")
    by_size: list[list[Cmd]] = [[]]
    for n in range(1, max_nodes + 1):
        last = n == max_nodes
        level = _commands_of_size(n, by_size, vars, expr_pool, test_pool)
        if last:
            yield from level
        else:
            level = list(level)
            by_size.append(level)
            yield from level


def _commands_of_size(n, by_size, vars, expr_pool, test_pool) -> Iterator[Cmd]:
    if n == 1:
        for x in vars:
            for e in expr_pool:
                yield Assign(x, e)
        return
    for ctor in (Seq, Par):
        for i in range(1, n):
            for a in by_size[i]:
                for b in by_size[n - i]:
                    yield ctor(a, b)
    for t in test_pool:
        for i in range(1, n - 1):
            for a in by_size[i]:
                for b in by_size[n - 1 - i]:
                    yield If(t, a, b)
    for t in test_pool:
        for a in by_size[n - 1]:
            yield While(t, a)


def count_cmds(max_nodes: int, n_atoms: int, n_tests: int) -> int:
    """Closed-form size of :func:`enumerate_cmds` output (for reporting)."""
    counts = [0, n_atoms]
    for n in range(2, max_nodes + 1):
        k = 2 * sum(counts[i] * counts[n - i] for i in range(1, n))
        k += n_tests * sum(counts[i] * counts[n - 1 - i] for i in range(1, n - 1))
        k += n_tests * counts[n - 1]
        counts.append(k)
    return sum(counts[1:max_nodes + 1])


def _aexps_by_size(max_nodes: int, vars: Sequence[str], consts: Sequence[int]) -> list[list[AExp]]:
    by_size: list[list[AExp]] = [[], [*map(IntConst, consts), *map(Var, vars)]]
    for n in range(2, max_nodes + 1):
        by_size.append([BinOp(op, a, b) for op in AEXP_OPS for i in range(1, n - 1)
                        for a in by_size[i] for b in by_size[n - 1 - i]])
    return by_size


def enumerate_aexps(max_nodes: int, vars: Sequence[str],
                    consts: Sequence[int] = (0, 1)) -> Iterator[AExp]:
    """Every arithmetic expression with at most ``max_nodes`` constructors."""
    for level in _aexps_by_size(max_nodes, _dedup(vars), _dedup(consts))[1:]:
        yield from level


def enumerate_bexps(max_nodes: int, vars: Sequence[str],
                    consts: Sequence[int] = (0, 1)) -> Iterator[BExp]:
    """Every test with at most ``max_nodes`` constructors (operands included)."""
    aexps = _aexps_by_size(max_nodes, _dedup(vars), _dedup(consts))
    by_size: list[list[BExp]] = [[], [BoolConst(True), BoolConst(False)]]
    for n in range(2, max_nodes + 1):
        level: list[BExp] = [Cmp(op, a, b) for op in CMP_OPS for i in range(1, n - 1)
                             for a in aexps[i] for b in aexps[n - 1 - i]]
        level += [Not(b) for b in by_size[n - 1]]
        level += [ctor(a, b) for ctor in (And, Or) for i in range(1, n - 1)
                  for a in by_size[i] for b in by_size[n - 1 - i]]
        by_size.append(level)
    for level in by_size[1:]:
        yield from level


def random_aexp(rng: random.Random, vars: Sequence[str], depth: int = 3,
                max_const: int = 9) -> AExp:
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.5:
            return IntConst(rng.randint(0, max_const))
        return Var(rng.choice(vars))
    return BinOp(rng.choice(AEXP_OPS), random_aexp(rng, vars, depth - 1, max_const),
                 random_aexp(rng, vars, depth - 1, max_const))


def random_bexp(rng: random.Random, vars: Sequence[str], depth: int = 3) -> BExp:
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.15:
            return BoolConst(rng.random() < 0.5)
        return Cmp(rng.choice(CMP_OPS), random_aexp(rng, vars, 2), random_aexp(rng, vars, 2))
    k = rng.randrange(3)
    if k == 0:
        return Not(random_bexp(rng, vars, depth - 1))
    ctor = And if k == 1 else Or
    return ctor(random_bexp(rng, vars, depth - 1), random_bexp(rng, vars, depth - 1))


def random_cmd(rng: random.Random, depth: int, vars: Sequence[str],
               expr_pool: Sequence[AExp] | None = None,
               test_pool: Sequence[BExp] | None = None) -> Cmd:
    """Random command of nesting depth at most ``depth`` (an atom has depth 1).

    Expressions and tests are drawn from the pools when given, otherwise
    generated freshly over ``vars``.
    """
    if depth <= 1 or rng.random() < 0.25:
        e = rng.choice(expr_pool) if expr_pool else random_aexp(rng, vars)
        return Assign(rng.choice(vars), e)
    sub = lambda: random_cmd(rng, depth - 1, vars, expr_pool, test_pool)
    test = lambda: rng.choice(test_pool) if test_pool else random_bexp(rng, vars)
    k = rng.randrange(4)
    if k == 0:
        return Seq(sub(), sub())
    if k == 1:
        return If(test(), sub(), sub())
    if k == 2:
        return While(test(), sub())
    return Par(sub(), sub())


# -- concrete syntax -----------------------------------------------------------

KEYWORDS = frozenset("low high if then else fi while do od not and or true false".split())

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>:=|\|\||<=|[-+*=<;,(){}])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num' | 'ident' | 'kw' | 'sym' | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token("kw" if m.group() in KEYWORDS else "ident", m.group(), line, col))
        elif kind in ("num", "sym"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.env: dict[str, Level] = {}

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self) -> Token:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        self.i += 1
        return tok

    def use(self, tok: Token) -> str:
        if tok.text not in self.env:
            raise self.error(f"undeclared variable {tok.text!r}", tok)
        return tok.text

    # program ::= decl* cmd
    def program(self) -> Program:
        while self.at("low") or self.at("high"):
            level = LO if self.tok.text == "low" else HI
            self.i += 1
            while True:
                name = self.ident()
                if name.text in self.env:
                    raise self.error(f"duplicate declaration of {name.text!r}", name)
                self.env[name.text] = level
                if not self.accept(","):
                    break
            self.expect(";")
        body = self.cmd()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after command")
        return Program(dict(self.env), body)

    def cmd(self) -> Cmd:
        head = self.par()
        if self.accept(";"):
            return Seq(head, self.cmd())
        return head

    def par(self) -> Cmd:
        if self.accept("{"):
            left = self.cmd()
            self.expect("||")
            right = self.cmd()
            self.expect("}")
            return Par(left, right)
        return self.unit()

    def unit(self) -> Cmd:
        if self.accept("if"):
            test = self.bexp()
            self.expect("then")
            a = self.cmd()
            self.expect("else")
            b = self.cmd()
            self.expect("fi")
            return If(test, a, b)
        if self.accept("while"):
            test = self.bexp()
            self.expect("do")
            body = self.cmd()
            self.expect("od")
            return While(test, body)
        if self.accept("("):
            c = self.cmd()
            self.expect(")")
            return c
        if self.tok.kind == "ident":
            name = self.use(self.ident())
            self.expect(":=")
            return Assign(name, self.aexp())
        raise self.error(f"expected a command, found {self.tok.text or 'end of input'!r}")

    def aexp(self) -> AExp:
        e = self.term()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> AExp:
        e = self.factor()
        while self.accept("*"):
            e = BinOp("*", e, self.factor())
        return e

    def factor(self) -> AExp:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return IntConst(int(tok.text))
        if tok.kind == "ident":
            self.i += 1
            return Var(self.use(tok))
        if self.accept("("):
            e = self.aexp()
            self.expect(")")
            return e
        raise self.error(f"expected an expression, found {tok.text or 'end of input'!r}")

    def bexp(self) -> BExp:
        b = self.bterm()
        while self.accept("or"):
            b = Or(b, self.bterm())
        return b

    def bterm(self) -> BExp:
        b = self.bfac()
        while self.accept("and"):
            b = And(b, self.bfac())
        return b

    def bfac(self) -> BExp:
        if self.accept("not"):
            return Not(self.bfac())
        if self.accept("true"):
            return BoolConst(True)
        if self.accept("false"):
            return BoolConst(False)
        if self.at("("):
            # "(" opens either a parenthesised test or the left operand of a
            # comparison; try the comparison first and backtrack.
            start = self.i
            try:
                return self.comparison()
            except ParseError:
                self.i = start
            self.expect("(")
            b = self.bexp()
            self.expect(")")
            return b
        return self.comparison()

    def comparison(self) -> BExp:
        left = self.aexp()
        for op in CMP_OPS[::-1]:
            if self.accept(op):
                return Cmp(op, left, self.aexp())
        raise self.error(f"expected a comparison operator, found {self.tok.text or 'end of input'!r}")


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_cmd(text: str, env: SecEnv) -> Cmd:
    """Parse a bare command against an existing environment."""
    p = _Parser(text)
    p.env = dict(env)
    c = p.cmd()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after command")
    return c


_APREC = {"+": 1, "-": 1, "*": 2}


def pretty_aexp(e: AExp, prec: int = 0) -> str:
    match e:
        case IntConst(v):
            return str(v) if v >= 0 else f"(0 - {-v})"
        case Var(name):
            return name
        case BinOp(op, a, b):
            p = _APREC[op]
            s = f"{pretty_aexp(a, p)} {op} {pretty_aexp(b, p + 1)}"
            return f"({s})" if p < prec else s
    raise TypeError(f"not an arithmetic expression: {e!r}")


def pretty_bexp(b: BExp, prec: int = 0) -> str:
    # precedence: or=1, and=2, not/atoms=3
    match b:
        case BoolConst(v):
            return "true" if v else "false"
        case Cmp(op, x, y):
            return f"{pretty_aexp(x)} {op} {pretty_aexp(y)}"
        case Not(a):
            return f"not {pretty_bexp(a, 3)}"
        case And(x, y):
            s = f"{pretty_bexp(x, 2)} and {pretty_bexp(y, 3)}"
            return f"({s})" if prec > 2 else s
        case Or(x, y):
            s = f"{pretty_bexp(x, 1)} or {pretty_bexp(y, 2)}"
            return f"({s})" if prec > 1 else s
    raise TypeError(f"not a test: {b!r}")


def pretty_cmd(c: Cmd) -> str:
    match c:
        case Assign(x, e):
            return f"{x} := {pretty_aexp(e)}"
        case Seq(a, b):
            head = pretty_cmd(a)
            if isinstance(a, Seq):
                head = f"({head})"
            return f"{head}; {pretty_cmd(b)}"
        case If(t, a, b):
            return f"if {pretty_bexp(t)} then {pretty_cmd(a)} else {pretty_cmd(b)} fi"
        case While(t, a):
            return f"while {pretty_bexp(t)} do {pretty_cmd(a)} od"
        case Par(a, b):
            return f"{{ {pretty_cmd(a)} || {pretty_cmd(b)} }}"
    raise TypeError(f"not a command: {c!r}")


def pretty_print(p: Program) -> str:
    lines = []
    for kw, level in (("low", LO), ("high", HI)):
        names = sorted(x for x, lv in p.sec_env.items() if lv == level)
        if names:
            lines.append(f"{kw} {', '.join(names)};")
    lines.append(pretty_cmd(p.body))
    return "\n".join(lines)
