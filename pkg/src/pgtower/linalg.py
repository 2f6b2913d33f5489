"""Row reduction over F_p on lists of int lists."""

from __future__ import annotations

from typing import Optional, Sequence


def rref(rows: Sequence[Sequence[int]], p: int, ncols: int,
         order: Optional[Sequence[int]] = None):
    """Reduced row echelon form; pivots are searched in column ``order``.

    Returns ``(rows, pivots)`` with ``rows[r][pivots[r]] == 1``.
    """
    order = list(order) if order is not None else list(range(ncols))
    A = [[x % p for x in r] for r in rows]
    A = [r for r in A if any(r)]
    pivots: list[int] = []
    rank = 0
    for c in order:
        piv = next((r for r in range(rank, len(A)) if A[r][c]), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        inv = pow(A[rank][c], -1, p)
        A[rank] = [(x * inv) % p for x in A[rank]]
        for r in range(len(A)):
            if r != rank and A[r][c]:
                f = A[r][c]
                A[r] = [(x - f * y) % p for x, y in zip(A[r], A[rank])]
        pivots.append(c)
        rank += 1
        if rank == len(A):
            break
    return A[:rank], pivots


def rank(rows, p: int, ncols: int) -> int:
    return len(rref(rows, p, ncols)[0])


def reduce_vector(v: Sequence[int], basis, pivots, p: int) -> list[int]:
    v = [x % p for x in v]
    for row, c in zip(basis, pivots):
        if v[c]:
            f = v[c]
            v = [(x - f * y) % p for x, y in zip(v, row)]
    return v


def nullspace(rows: Sequence[Sequence[int]], p: int, ncols: int) -> list[list[int]]:
    """Basis of ``{x : row . x = 0 for all rows}``."""
    R, piv = rref(rows, p, ncols)
    free = [c for c in range(ncols) if c not in piv]
    out = []
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for row, c in zip(R, piv):
            x[c] = (-row[f]) % p
        out.append(x)
    return out


def in_span(v, basis, pivots, p) -> bool:
    return not any(reduce_vector(v, basis, pivots, p))
