"""Greatest-fixpoint refinement of security bisimulation candidates.

Nodes are integers ``0..n-1`` with CSR successor arrays.  Relations and node
sets are rows of 64-bit words (``rows[a, b >> 6]`` bit ``b & 63``).  The
candidate relation starts as "same low class" and pairs are removed in
rounds: a pair is removed in round ``k`` when its clause (in either
orientation) fails against the relation left by round ``k - 1``.

One refiner is compiled per mode so that the mode is a compile-time constant
inside the clause loop; a runtime mode is an order of magnitude slower.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

STRONG, ZERO_ONE, WEAK, WEAK_T = 0, 1, 2, 3
MODES = (STRONG, ZERO_ONE, WEAK, WEAK_T)


@njit(cache=True, inline="always")
def _bit(b):
    return np.uint64(1) << np.uint64(b & 63)


@njit(cache=True)
def successor_rows(n, indptr, indices):
    W = (n + 63) >> 6
    rows = np.zeros((n, W), np.uint64)
    for a in range(n):
        for e in range(indptr[a], indptr[a + 1]):
            b = indices[e]
            rows[a, b >> 6] |= _bit(b)
    return rows


@njit(cache=True)
def reach_rows(n, indptr, indices):
    """Reflexive-transitive successor closure, one row per node."""
    W = (n + 63) >> 6
    rows = np.zeros((n, W), np.uint64)
    stack = np.empty(n, np.int64)
    for a in range(n):
        rows[a, a >> 6] |= _bit(a)
        top = 0
        stack[top] = a
        top += 1
        while top > 0:
            top -= 1
            x = stack[top]
            for e in range(indptr[x], indptr[x + 1]):
                y = indices[e]
                if rows[a, y >> 6] & _bit(y) == 0:
                    rows[a, y >> 6] |= _bit(y)
                    stack[top] = y
                    top += 1
    return rows


@njit(cache=True, inline="always")
def _gfp(n, indptr, indices, low, term, match, reach, MODE, rounds, RECORD):
    W = (n + 63) >> 6
    term_row = np.zeros(W, np.uint64)
    for a in range(n):
        if term[a]:
            term_row[a >> 6] |= _bit(a)
    R = np.zeros((n, W), np.uint64)
    for a in range(n):
        for b in range(n):
            if low[a] == low[b]:
                R[a, b >> 6] |= _bit(b)
    if RECORD:
        for a in range(n):
            for b in range(n):
                rounds[a, b] = 0 if low[a] == low[b] else -1
    # With round numbers, removals take effect at the end of each round.
    # Otherwise they apply in place and reverse breadth-first order visits
    # successors first, so removals propagate backwards within one sweep.
    nxt = R.copy() if RECORD else R
    rnd = 0
    changed = True
    while changed:
        changed = False
        rnd += 1
        for a in range(n - 1, -1, -1):
            for b in range(n - 1, a - 1, -1):
                if R[a, b >> 6] & _bit(b) == 0:
                    continue
                ok = True
                if MODE == STRONG:
                    ok = term[a] == term[b]
                for (x, y) in ((a, b), (b, a)):
                    if not ok:
                        break
                    if MODE == WEAK_T and term[x]:
                        # y must be able to reach a related terminated node
                        found = False
                        for k in range(W):
                            if reach[y, k] & term_row[k] & R[x, k] != 0:
                                found = True
                                break
                        if not found:
                            ok = False
                            break
                    # every move of x is answered from match(y)
                    for e in range(indptr[x], indptr[x + 1]):
                        x2 = indices[e]
                        found = False
                        for k in range(W):
                            if match[y, k] & R[x2, k] != 0:
                                found = True
                                break
                        if not found:
                            ok = False
                            break
                if ok:
                    continue
                nxt[a, b >> 6] &= ~_bit(b)
                nxt[b, a >> 6] &= ~_bit(a)
                if RECORD:
                    rounds[a, b] = rnd
                    rounds[b, a] = rnd
                changed = True
        if RECORD:
            R[:, :] = nxt
    return R


@njit(cache=True)
def _with_self(n, rows):
    out = rows.copy()
    for a in range(n):
        out[a, a >> 6] |= _bit(a)
    return out


@njit(cache=True)
def _refine_strong(n, indptr, indices, low, term, succ, reach, rounds, record):
    if record:
        return _gfp(n, indptr, indices, low, term, succ, reach, STRONG, rounds, True)
    return _gfp(n, indptr, indices, low, term, succ, reach, STRONG, rounds, False)


@njit(cache=True)
def _refine_zo(n, indptr, indices, low, term, succ, reach, rounds, record):
    match = _with_self(n, succ)
    if record:
        return _gfp(n, indptr, indices, low, term, match, reach, ZERO_ONE, rounds, True)
    return _gfp(n, indptr, indices, low, term, match, reach, ZERO_ONE, rounds, False)


@njit(cache=True)
def _refine_weak(n, indptr, indices, low, term, succ, reach, rounds, record):
    if record:
        return _gfp(n, indptr, indices, low, term, reach, reach, WEAK, rounds, True)
    return _gfp(n, indptr, indices, low, term, reach, reach, WEAK, rounds, False)


@njit(cache=True)
def _refine_weakt(n, indptr, indices, low, term, succ, reach, rounds, record):
    if record:
        return _gfp(n, indptr, indices, low, term, reach, reach, WEAK_T, rounds, True)
    return _gfp(n, indptr, indices, low, term, reach, reach, WEAK_T, rounds, False)


_REFINERS = (_refine_strong, _refine_zo, _refine_weak, _refine_weakt)


def _inputs(n, indptr, indices, mode):
    succ = successor_rows(n, indptr, indices)
    reach = reach_rows(n, indptr, indices) if mode in (WEAK, WEAK_T) else succ
    return succ, reach


def refine(n, indptr, indices, low, term, mode):
    """Final relation as bit rows."""
    succ, reach = _inputs(n, indptr, indices, mode)
    dummy = np.zeros((1, 1), np.int32)
    return _REFINERS[mode](n, indptr, indices, low, term, succ, reach, dummy, False)


def refine_rounds(n, indptr, indices, low, term, mode):
    """Dense ``n x n`` matrix: -1 not a candidate, 0 kept, k removed in round k."""
    succ, reach = _inputs(n, indptr, indices, mode)
    rounds = np.zeros((n, n), np.int32)
    _REFINERS[mode](n, indptr, indices, low, term, succ, reach, rounds, True)
    return rounds


@njit(cache=True)
def _first_outside(R, low, n, n_init):
    for a in range(n_init):
        for b in range(a + 1, n_init):
            if low[a] == low[b] and R[a, b >> 6] & _bit(b) == 0:
                return a * n + b
    return -1


@njit(cache=True)
def first_failures(n, indptr, indices, low, term, n_init, wanted):
    """For each requested mode, the first low-equivalent pair of initial
    nodes ``(a, b)``, ``a < b < n_init``, outside the relation, encoded as
    ``a * n + b``; ``-1`` when there is none and ``-2`` when not requested."""
    out = np.full(4, -2, np.int64)
    succ = successor_rows(n, indptr, indices)
    reach = reach_rows(n, indptr, indices) if wanted[WEAK] or wanted[WEAK_T] else succ
    dummy = np.zeros((1, 1), np.int32)
    if wanted[STRONG]:
        R = _refine_strong(n, indptr, indices, low, term, succ, reach, dummy, False)
        out[STRONG] = _first_outside(R, low, n, n_init)
    if wanted[ZERO_ONE]:
        R = _refine_zo(n, indptr, indices, low, term, succ, reach, dummy, False)
        out[ZERO_ONE] = _first_outside(R, low, n, n_init)
    if wanted[WEAK]:
        R = _refine_weak(n, indptr, indices, low, term, succ, reach, dummy, False)
        out[WEAK] = _first_outside(R, low, n, n_init)
    if wanted[WEAK_T]:
        R = _refine_weakt(n, indptr, indices, low, term, succ, reach, dummy, False)
        out[WEAK_T] = _first_outside(R, low, n, n_init)
    return out
