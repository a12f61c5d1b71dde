"""The four command type systems.

Each system is available in two presentations:

* :func:`analyze` computes the safety predicates and typing functions by a
  single structural recursion;
* :func:`deriv_set_vs` / :func:`deriv_set_rw` apply the inductive typing rules
  directly and return every derivable type.  They share no code with
  :func:`analyze` and serve as its oracle.

``VS1`` and ``VS2`` assign a single (write) level, ``BC`` and ``MB`` a pair
``(write, read)``; write levels are contravariant, read levels covariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cache
from itertools import product
from typing import Iterator, NamedTuple

from .lang import (HI, LO, Assign, BExp, Cmd, If, Level, Par, SecEnv, Seq,
                   UnknownVariableError, While, pretty_cmd, vars_of)
from .typing_base import min_tp


class SystemId(Enum):
    VS1 = "vs1"
    VS2 = "vs2"
    BC = "bc"
    MB = "mb"

    @classmethod
    def parse(cls, name: str) -> "SystemId":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(f"unknown type system {name!r}") from None


class Analysis(NamedTuple):
    """Safety predicates and typing functions of one command."""

    safe1: bool
    safe2: bool
    safe3: bool
    safe4: bool
    max_tp1: Level
    max_wtp: Level
    min_rtp: Level
    min_trtp: Level
    no_while_flag: bool

    @property
    def fhigh(self) -> bool:
        return self.max_tp1 == HI

    @property
    def high(self) -> bool:
        return self.max_wtp == HI

    @property
    def low_cmd(self) -> bool:
        return self.min_rtp == LO

    @property
    def wlow(self) -> bool:
        return self.min_trtp == LO

    def safe(self, system: SystemId) -> bool:
        if system is SystemId.VS1:
            return self.safe1
        if system is SystemId.VS2:
            return self.safe2
        if system is SystemId.BC:
            return self.safe3
        return self.safe4


def analyze(c: Cmd, env: SecEnv, cache: dict | None = None) -> Analysis:
    """Compute every safety predicate and typing function of ``c`` in one pass.

    ``cache`` maps already analysed subcommands to their result; pass the
    same dict across calls that share ``env`` to reuse work.
    """
    if cache is None:
        cache = {}
    return _analyze(c, env, cache)


def _min_tp(e, env: SecEnv, cache: dict) -> Level:
    # expressions never compare equal to commands, so they share the cache
    hit = cache.get(e)
    if hit is None:
        hit = cache[e] = min_tp(e, env)
    return hit


def _analyze(c: Cmd, env: SecEnv, cache: dict) -> Analysis:
    hit = cache.get(c)
    if hit is not None:
        return hit
    match c:
        case Assign(x, e):
            try:
                level = env[x]
            except KeyError:
                raise UnknownVariableError(x) from None
            ok = _min_tp(e, env, cache) <= level
            res = Analysis(ok, ok, ok, ok, level, level, LO, LO, True)
        case Seq(c1, c2) | Par(c1, c2):
            a, b = _analyze(c1, env, cache), _analyze(c2, env, cache)
            both1 = a.safe1 and b.safe1
            both2 = a.safe2 and b.safe2
            both3 = a.safe3 and b.safe3
            both4 = a.safe4 and b.safe4
            if isinstance(c, Seq):
                both3 = both3 and a.min_rtp <= b.max_wtp
                both4 = both4 and a.min_trtp <= b.max_wtp
            res = Analysis(both1, both2, both3, both4,
                           min(a.max_tp1, b.max_tp1), min(a.max_wtp, b.max_wtp),
                           max(a.min_rtp, b.min_rtp), max(a.min_trtp, b.min_trtp),
                           a.no_while_flag and b.no_while_flag)
        case If(t, c1, c2):
            a, b = _analyze(c1, env, cache), _analyze(c2, env, cache)
            lt = _min_tp(t, env, cache)
            tp1 = min(a.max_tp1, b.max_tp1)
            wtp = min(a.max_wtp, b.max_wtp)
            nw = a.no_while_flag and b.no_while_flag
            res = Analysis(
                a.safe1 and b.safe1 and lt <= tp1,
                lt == LO and a.safe2 and b.safe2,
                a.safe3 and b.safe3 and lt <= wtp,
                a.safe4 and b.safe4 and lt <= wtp,
                tp1, wtp,
                max(lt, a.min_rtp, b.min_rtp),
                LO if nw else max(lt, a.min_trtp, b.min_trtp),
                nw)
        case While(t, body):
            a = _analyze(body, env, cache)
            lt = _min_tp(t, env, cache)
            rtp = max(lt, a.min_rtp)
            trtp = max(lt, a.min_trtp)
            res = Analysis(
                a.safe1 and lt == LO,
                a.safe2 and lt == LO,
                a.safe3 and rtp <= a.max_wtp,
                a.safe4 and trtp <= a.max_wtp,
                LO, a.max_wtp, rtp, trtp, False)
        case _:
            raise TypeError(f"not a command: {c!r}")
    cache[c] = res
    return res


# -- rule-based derivability ---------------------------------------------------
#
# Derivable types are bitmasks: for single levels bit ``l``; for pairs bit
# ``2*w + r``.  The rule functions enumerate premises literally and close the
# result under SUBTYPE afterwards.

_LEVELS = (LO, HI)
_PAIRS = tuple(product(_LEVELS, _LEVELS))


def _rule_exp_types(e, env: SecEnv) -> tuple[Level, ...]:
    """Levels derivable for an expression or test by the base rules plus
    SUBTYPE-EXP/SUBTYPE-TST."""
    names = vars_of(e)
    for x in names:
        if x not in env:
            raise UnknownVariableError(x)
    base = {HI}
    if all(env[x] == LO for x in names):
        base.add(LO)
    closed = {k for l in base for k in _LEVELS if l <= k}
    return tuple(sorted(closed))


def deriv_set_exp(e, env: SecEnv) -> frozenset[Level]:
    """Every level derivable for an expression or test: the base rules give
    ``lo`` when all its variables are low and ``hi`` always, closed upwards."""
    return frozenset(_rule_exp_types(e, env))


def _levels(mask: int) -> Iterator[Level]:
    return (l for l in _LEVELS if mask >> l & 1)


def _pairs(mask: int) -> Iterator[tuple[Level, Level]]:
    return ((w, r) for w, r in _PAIRS if mask >> (2 * w + r) & 1)


@cache
def _close_down(mask: int) -> int:
    out = 0
    for l in _levels(mask):
        for k in _LEVELS:
            if k <= l:
                out |= 1 << k
    return out


@cache
def _close_rw(mask: int) -> int:
    out = 0
    for w1, r1 in _pairs(mask):
        for w2, r2 in _PAIRS:
            if w2 <= w1 and r1 <= r2:
                out |= 1 << (2 * w2 + r2)
    return out


# Rule bodies are pure functions of the premises' type masks, so they are
# memoised; the corpus sweeps call them millions of times.

@cache
def _vs_both(d1: int, d2: int) -> int:
    out = 0
    for l in _LEVELS:
        if d1 >> l & 1 and d2 >> l & 1:
            out |= 1 << l
    return _close_down(out)


@cache
def _vs_if(tt: tuple, strict_if: bool, d1: int, d2: int) -> int:
    out = 0
    for l in _LEVELS:
        test_ok = LO in tt if strict_if else l in tt
        if test_ok and d1 >> l & 1 and d2 >> l & 1:
            out |= 1 << l
    return _close_down(out)


@cache
def _vs_while(tt: tuple, d: int) -> int:
    return _close_down(1 << LO if LO in tt and d != 0 else 0)


@cache
def _rw_seq(d1: int, d2: int) -> int:
    out = 0
    for w1, r1 in _pairs(d1):
        for w2, r2 in _pairs(d2):
            if r1 <= w2:
                out |= 1 << (2 * min(w1, w2) + max(r1, r2))
    return _close_rw(out)


@cache
def _rw_if(tt: tuple, terminating: bool, d1: int, d2: int) -> int:
    out = 0
    for l0 in tt:
        for w, r in _pairs(d1 & d2):
            if l0 <= w:
                k = LO if terminating else max(l0, r)
                out |= 1 << (2 * w + k)
    return _close_rw(out)


@cache
def _rw_while(tt: tuple, while_prime: bool, d: int) -> int:
    out = 0
    for w, r in _pairs(d):
        if while_prime:
            for l0 in tt:
                if max(l0, r) <= w:
                    out |= 1 << (2 * w + max(l0, r))
        elif r in tt and r <= w:
            out |= 1 << (2 * w + r)
    return _close_rw(out)


def _exp_types(e, env: SecEnv, cache: dict) -> tuple:
    # expressions never compare equal to commands, so they share the cache
    hit = cache.get(e)
    if hit is None:
        hit = cache[e] = _rule_exp_types(e, env)
    return hit


# Slots of the tuple computed by _derive: one mask per system, the BC and MB
# masks again under the WHILE' loop rule, and whether the command is loop-free.
_VS1, _VS2, _BC, _MB, _BC_PRIME, _MB_PRIME, _NO_WHILE = range(7)


def _derive(c: Cmd, env: SecEnv, cache: dict) -> tuple:
    """Derivable types of ``c`` in every system, by rule application."""
    hit = cache.get(c)
    if hit is not None:
        return hit
    match c:
        case Assign(x, e):
            if x not in env:
                raise UnknownVariableError(x)
            level = env[x]
            ok = level in _exp_types(e, env, cache)
            vs = _close_down(1 << level if ok else 0)
            rw = 0
            if ok:
                for r in _LEVELS:
                    rw |= 1 << (2 * level + r)
            rw = _close_rw(rw)
            out = (vs, vs, rw, rw, rw, rw, True)
        case Seq(c1, c2):
            a, b = _derive(c1, env, cache), _derive(c2, env, cache)
            vs1 = _vs_both(a[_VS1], b[_VS1])
            vs2 = _vs_both(a[_VS2], b[_VS2])
            out = (vs1, vs2, _rw_seq(a[_BC], b[_BC]), _rw_seq(a[_MB], b[_MB]),
                   _rw_seq(a[_BC_PRIME], b[_BC_PRIME]), _rw_seq(a[_MB_PRIME], b[_MB_PRIME]),
                   a[_NO_WHILE] and b[_NO_WHILE])
        case Par(c1, c2):
            a, b = _derive(c1, env, cache), _derive(c2, env, cache)
            out = (_vs_both(a[_VS1], b[_VS1]), _vs_both(a[_VS2], b[_VS2]),
                   *(_close_rw(a[k] & b[k]) for k in (_BC, _MB, _BC_PRIME, _MB_PRIME)),
                   a[_NO_WHILE] and b[_NO_WHILE])
        case If(t, c1, c2):
            a, b = _derive(c1, env, cache), _derive(c2, env, cache)
            tt = _exp_types(t, env, cache)
            nw = a[_NO_WHILE] and b[_NO_WHILE]
            out = (_vs_if(tt, False, a[_VS1], b[_VS1]), _vs_if(tt, True, a[_VS2], b[_VS2]),
                   _rw_if(tt, False, a[_BC], b[_BC]), _rw_if(tt, nw, a[_MB], b[_MB]),
                   _rw_if(tt, False, a[_BC_PRIME], b[_BC_PRIME]),
                   _rw_if(tt, nw, a[_MB_PRIME], b[_MB_PRIME]), nw)
        case While(t, body):
            a = _derive(body, env, cache)
            tt = _exp_types(t, env, cache)
            out = (_vs_while(tt, a[_VS1]), _vs_while(tt, a[_VS2]),
                   _rw_while(tt, False, a[_BC]), _rw_while(tt, False, a[_MB]),
                   _rw_while(tt, True, a[_BC_PRIME]), _rw_while(tt, True, a[_MB_PRIME]),
                   False)
        case _:
            raise TypeError(f"not a command: {c!r}")
    cache[c] = out
    return out


def deriv_masks(c: Cmd, env: SecEnv, cache: dict | None = None) -> tuple[int, int, int, int]:
    """Derivable-type masks for ``(VS1, VS2, BC, MB)`` in one pass.

    ``cache`` may be shared across calls with the same ``env``.
    """
    return _derive(c, env, {} if cache is None else cache)[:4]


def deriv_mask(c: Cmd, env: SecEnv, system: SystemId, cache: dict | None = None,
               while_prime: bool = False) -> int:
    """Bitmask form of :func:`deriv_set_vs` / :func:`deriv_set_rw`."""
    d = _derive(c, env, {} if cache is None else cache)
    if while_prime:
        if system is SystemId.BC:
            return d[_BC_PRIME]
        if system is SystemId.MB:
            return d[_MB_PRIME]
    if system is SystemId.VS1:
        return d[_VS1]
    if system is SystemId.VS2:
        return d[_VS2]
    return d[_BC] if system is SystemId.BC else d[_MB]


def deriv_set_vs(c: Cmd, env: SecEnv, system: SystemId) -> frozenset[Level]:
    """Every ``l`` with ``c :: l`` derivable in the single-level systems."""
    if system not in (SystemId.VS1, SystemId.VS2):
        raise ValueError(f"{system} is not a single-level system")
    return frozenset(_levels(deriv_mask(c, env, system)))


def deriv_set_rw(c: Cmd, env: SecEnv, system: SystemId,
                 while_prime: bool = False) -> frozenset[tuple[Level, Level]]:
    """Every ``(w, r)`` with ``c :: (w, r)`` derivable in BC or MB.

    ``while_prime`` swaps in the alternative loop rule whose read level is
    ``l0 v l'`` for an arbitrary test level ``l0``.
    """
    if system not in (SystemId.BC, SystemId.MB):
        raise ValueError(f"{system} is not a read/write system")
    return frozenset(_pairs(deriv_mask(c, env, system, while_prime=while_prime)))


def characterized_mask(a: Analysis, system: SystemId) -> int:
    """Types the recursive characterisation predicts, as a bitmask."""
    out = 0
    if system is SystemId.VS1 or system is SystemId.VS2:
        if a.safe(system):
            for l in _LEVELS:
                if l <= a.max_tp1:
                    out |= 1 << l
        return out
    if a.safe(system):
        min_r = a.min_rtp if system is SystemId.BC else a.min_trtp
        for w, r in _PAIRS:
            if w <= a.max_wtp and min_r <= r:
                out |= 1 << (2 * w + r)
    return out


@dataclass(frozen=True)
class LemmaCheck:
    system: SystemId
    agree: bool
    derived: frozenset
    characterized: frozenset

    @property
    def witness(self) -> frozenset:
        """Types on which the two presentations disagree."""
        return self.derived ^ self.characterized


def check_lemma_equiv(c: Cmd, env: SecEnv) -> dict[SystemId, LemmaCheck]:
    a = analyze(c, env)
    out = {}
    for system in SystemId:
        derived = deriv_mask(c, env, system)
        predicted = characterized_mask(a, system)
        decode = _levels if system in (SystemId.VS1, SystemId.VS2) else _pairs
        out[system] = LemmaCheck(system, derived == predicted,
                                 frozenset(decode(derived)), frozenset(decode(predicted)))
    return out


def first_failure(c: Cmd, env: SecEnv, system: SystemId,
                  cache: dict | None = None) -> tuple[str, Cmd] | None:
    """Locate the innermost rejected subterm whose own clause fails.

    Returns ``(path, subterm)`` where ``path`` names the route from the root
    (``""`` for the root itself), or ``None`` when ``c`` is accepted.
    """
    if cache is None:
        cache = {}
    if analyze(c, env, cache).safe(system):
        return None
    path = []
    while True:
        match c:
            case Seq(a, b) | Par(a, b):
                kids = (("first", a), ("second", b)) if isinstance(c, Seq) else \
                       (("left", a), ("right", b))
            case If(_, a, b):
                kids = (("then", a), ("else", b))
            case While(_, a):
                kids = (("body", a),)
            case _:
                kids = ()
        for label, kid in kids:
            if not analyze(kid, env, cache).safe(system):
                path.append(label)
                c = kid
                break
        else:
            return "/".join(path), c


def describe_failure(c: Cmd, env: SecEnv, system: SystemId) -> str | None:
    hit = first_failure(c, env, system)
    if hit is None:
        return None
    path, sub = hit
    return f"{path or '<root>'}: {pretty_cmd(sub)}"
