"""Finite abelian p-groups: Smith normal form and invariant lists."""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Sequence

AbelianInvariants = tuple[int, ...]


def canonical(orders: Iterable[int]) -> AbelianInvariants:
    """Drop trivial factors and sort ascending, the ``[2,4,8]`` convention."""
    return tuple(sorted(q for q in orders if q != 1))


def format_invariants(inv: Sequence[int]) -> str:
    return "[" + ",".join(str(q) for q in inv) + "]"


def parse_invariants(text: str) -> AbelianInvariants:
    text = text.strip().strip("[]")
    if not text:
        return ()
    return canonical(int(t) for t in text.split(","))


def smith_form(rows: Sequence[Sequence[int]], ncols: int):
    """Diagonalize an integer matrix by unimodular row and column operations.

    Returns ``(diag, V, Vinv)`` with ``U @ A @ V = D`` for some unimodular
    ``U``; ``diag`` has length ``ncols`` (zero-padded), so the abelian group
    ``Z^ncols / rowspace(A)`` is ``sum Z/diag[i]`` in the coordinates
    ``y = x @ V``.
    """
    A = [list(r) for r in rows]
    n = ncols
    V = [[int(i == j) for j in range(n)] for i in range(n)]
    Vinv = [[int(i == j) for j in range(n)] for i in range(n)]

    def col_swap(a, b):
        for r in A:
            r[a], r[b] = r[b], r[a]
        for r in V:
            r[a], r[b] = r[b], r[a]
        Vinv[a], Vinv[b] = Vinv[b], Vinv[a]

    def col_add(src, dst, k):
        # column dst += k * column src
        for r in A:
            r[dst] += k * r[src]
        for r in V:
            r[dst] += k * r[src]
        # inverse: row src of Vinv -= k * row dst
        rs, rd = Vinv[src], Vinv[dst]
        for j in range(n):
            rs[j] -= k * rd[j]

    m = len(A)
    t = 0
    while t < min(m, n):
        # pivot: smallest nonzero absolute entry in the remaining block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = A[i][j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
        if best is None:
            break
        _, i, j = best
        A[t], A[i] = A[i], A[t]
        if j != t:
            col_swap(t, j)
        done = False
        while not done:
            done = True
            piv = A[t][t]
            for i in range(t + 1, m):
                q = A[i][t] // piv
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                if A[i][t]:
                    done = False
            for j in range(t + 1, n):
                q = A[t][j] // piv
                if q:
                    col_add(t, j, -q)
                if A[t][j]:
                    done = False
            if not done:
                best = None
                for i in range(t, m):
                    if A[i][t] and (best is None or abs(A[i][t]) < best[0]):
                        best = (abs(A[i][t]), i, "r")
                for j in range(t, n):
                    if A[t][j] and (best is None or abs(A[t][j]) < best[0]):
                        best = (abs(A[t][j]), j, "c")
                _, k, kind = best
                if kind == "r":
                    A[t], A[k] = A[k], A[t]
                elif k != t:
                    col_swap(t, k)
                continue
            # divisibility: every remaining entry must be a multiple of the pivot
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % piv:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is not None:
                A[t] = [a + b for a, b in zip(A[t], A[bad])]
                done = False
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
        t += 1
    diag = [A[i][i] if i < m else 0 for i in range(n)]
    return diag, V, Vinv


def invariants_from_relations(rows: Sequence[Sequence[int]], ncols: int) -> AbelianInvariants:
    diag, _, _ = smith_form(rows, ncols)
    if any(d == 0 for d in diag):
        raise ValueError("relation matrix presents an infinite group")
    return canonical(diag)


def invariants_from_orders(order_counts: dict[int, int], p: int) -> AbelianInvariants:
    """Invariants of an abelian p-group from ``{k: #elements with x^(p^k) = 1}``."""
    # r_k = number of cyclic factors of order >= p^k = log_p(count_k / count_{k-1})
    ks = sorted(order_counts)
    logs = {}
    for k in ks:
        c, e = order_counts[k], 0
        while c > 1:
            c //= p
            e += 1
        logs[k] = e
    out: list[int] = []
    kmax = max(ks) if ks else 0
    for k in range(1, kmax + 1):
        ge_k = logs.get(k, 0) - logs.get(k - 1, 0)
        ge_k1 = logs.get(k + 1, logs.get(k, 0)) - logs.get(k, 0)
        out.extend([p**k] * (ge_k - ge_k1))
    return canonical(out)


def is_quotient_of(small: Sequence[int], big: Sequence[int]) -> bool:
    """True iff the abelian group ``small`` is a quotient of ``big`` (both p-groups).

    Domination of exponent sequences, largest factor first.
    """
    a = sorted(small, reverse=True)
    b = sorted(big, reverse=True)
    if len(a) > len(b):
        return False
    return all(x <= y for x, y in zip(a, b))


def multiset(invs: Iterable[Sequence[int]]) -> Counter:
    return Counter(canonical(i) for i in invs)
