"""p-covering groups, multiplicator and nucleus, and the p-quotient algorithm.

The cover of ``G = F/R`` is built by attaching a fresh central tail of order
p to every relation that does not define a generator, then imposing the
linear conditions on tails forced by the consistency test words.  The tails
that survive span the p-multiplicator ``R/R*``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .fp import FpPresentation
from .linalg import reduce_vector, rref
from .pcp import PcPresentation, PresentationError
from .subgroups import p_central_series, p_class

log = logging.getLogger(__name__)


class MissingDefinitions(PresentationError):
    pass


@dataclass
class CoveringData:
    parent: PcPresentation
    cover: PcPresentation
    parent_class: int
    nucleus: list  # RREF rows in multiplicator coordinates

    @property
    def offset(self) -> int:
        return self.parent.ngens

    @property
    def multiplicator_rank(self) -> int:
        return self.cover.ngens - self.parent.ngens

    @property
    def nuclear_rank(self) -> int:
        return len(self.nucleus)

    @property
    def multiplicator(self) -> list:
        """Basis of ``R/R*`` as cover elements (the surviving tails)."""
        return [self.cover.gen(k) for k in range(self.offset, self.cover.ngens)]

    def coords(self, g) -> list[int]:
        """Multiplicator coordinates of a cover element lying in ``R/R*``."""
        n = self.offset
        if any(g[:n]):
            raise ValueError("element is not in the multiplicator")
        return list(g[n:])


def _defining_relations(pres: PcPresentation) -> set:
    out = set()
    for k, d in enumerate(pres.definitions):
        if pres.weights[k] == 1 and d is None:
            continue
        if d is None:
            raise MissingDefinitions(f"generator {k} of weight {pres.weights[k]} has no definition")
        out.add(d)
    return out


def _precover(pres: PcPresentation, tail_weight: int, extra: int = 0):
    """Presentation with a tail on every non-defining relation plus ``extra`` free
    central generators; returns ``(pre, tail_relations)``."""
    p, n = pres.prime, pres.ngens
    defining = _defining_relations(pres)
    rels = [("pow", i) for i in range(n) if ("pow", i) not in defining]
    rels += [("comm", j, i) for j in range(n) for i in range(j) if ("comm", j, i) not in defining]
    T = len(rels)
    N = n + T + extra
    pad = (0,) * (T + extra)
    powers = [list(v) + list(pad) for v in pres.powers]
    comms = [[list(v) + list(pad) for v in row] for row in pres.commutators]
    for t, r in enumerate(rels):
        if r[0] == "pow":
            powers[r[1]][n + t] = 1
        else:
            comms[r[1]][r[2]][n + t] = 1
    zero = (0,) * N
    powers = [tuple(v) for v in powers] + [zero] * (T + extra)
    comms = [tuple(tuple(v) for v in row) for row in comms]
    comms += [tuple(zero for _ in range(j)) for j in range(n, N)]
    weights = tuple(pres.weights) + (tail_weight,) * (T + extra)
    defs = tuple(pres.definitions) + tuple(rels) + (None,) * extra
    pre = PcPresentation(p, N, weights, defs, tuple(powers), tuple(comms), dgens=pres.dgens)
    return pre, rels


def _consistency_rows(pre: PcPresentation, n: int) -> list[list[int]]:
    p = pre.prime
    rows = []
    for lhs, rhs in pre.consistency_defects(upto=n):
        if lhs[:n] != rhs[:n]:
            raise PresentationError("input presentation is inconsistent")
        v = [(b - a) % p for a, b in zip(lhs[n:], rhs[n:])]
        if any(v):
            rows.append(v)
    return rows


def central_quotient(pre: PcPresentation, n: int, U: Sequence[Sequence[int]],
                     order: Optional[Sequence[int]] = None):
    """Factor out a subspace ``U`` of the central elementary block ``a_n ..``.

    Returns ``(quotient, project)`` where ``project`` maps block coordinates to
    the coordinates of the surviving block generators.
    """
    p = pre.prime
    T = pre.ngens - n
    R, piv = rref(U, p, T, order)
    kept = [t for t in range(T) if t not in set(piv)]
    N = n + len(kept)

    def project(x: Sequence[int]) -> list[int]:
        y = reduce_vector(x, R, piv, p) if R else [v % p for v in x]
        return [y[t] for t in kept]

    def rel(v):
        return tuple(v[:n]) + tuple(project(v[n:]))

    zero = (0,) * N
    powers = [rel(pre.powers[i]) for i in range(n)] + [zero] * len(kept)
    comms = [tuple(rel(pre.commutators[j][i]) for i in range(j)) for j in range(n)]
    comms += [tuple(zero for _ in range(j)) for j in range(n, N)]
    weights = tuple(pre.weights[:n]) + tuple(pre.weights[n + t] for t in kept)
    defs = tuple(pre.definitions[:n]) + tuple(pre.definitions[n + t] for t in kept)
    q = PcPresentation(p, N, weights, defs, tuple(powers), tuple(comms), dgens=pre.dgens)
    return q, project, kept


def _nucleus_weighted(pres: PcPresentation, cover: PcPresentation) -> list:
    n, p = pres.ngens, pres.prime
    c = max(pres.weights, default=0)
    if c == 0:
        return []
    top = [k for k in range(n) if pres.weights[k] == c]
    ones = [i for i in range(n) if pres.weights[i] == 1]
    vals = [cover.pow(cover.gen(k), p) for k in top]
    vals += [cover.comm(cover.gen(k), cover.gen(i)) for k in top for i in ones if i != k]
    rows = []
    for v in vals:
        if any(v[:n]):
            raise PresentationError("weights are not the p-central weights")
        rows.append(list(v[n:]))
    return rref(rows, p, cover.ngens - n)[0]


def _nucleus_generic(pres: PcPresentation, cover: PcPresentation) -> list:
    n = pres.ngens
    c = p_class(pres)
    series = p_central_series(cover)
    N = series[c].cgs if c < len(series) else ()
    rows = []
    for g in N:
        if any(g[:n]):
            raise PresentationError("nucleus escaped the multiplicator")
        rows.append(list(g[n:]))
    return rref(rows, pres.prime, cover.ngens - n)[0]


def p_covering_group(pres: PcPresentation, trust_weights: bool = True) -> CoveringData:
    """p-covering group with multiplicator and nucleus.

    ``trust_weights`` computes the nucleus from the weight-c generators; pass
    False for presentations whose weights are not p-central weights (covers).
    """
    n = pres.ngens
    c = max(pres.weights, default=0) if trust_weights else p_class(pres)
    pre, _ = _precover(pres, c + 1)
    rows = _consistency_rows(pre, n)
    cover, _, _ = central_quotient(pre, n, rows)
    if trust_weights:
        nucleus = _nucleus_weighted(pres, cover)
    else:
        nucleus = _nucleus_generic(pres, cover)
    return CoveringData(pres, cover, c, nucleus)


def multiplicator_rank(pres: PcPresentation) -> int:
    return p_covering_group(pres).multiplicator_rank


def nuclear_rank(pres: PcPresentation) -> int:
    return p_covering_group(pres).nuclear_rank


def quotient_of_cover(cd: CoveringData, U: Sequence[Sequence[int]]) -> PcPresentation:
    """``G*/U`` for a subspace ``U`` of the multiplicator (coordinates)."""
    q, _, _ = central_quotient(cd.cover, cd.offset, U)
    return q


# ---------------------------------------------------------------- p-quotient

@dataclass
class PQuotientStep:
    presentation: PcPresentation
    images: list  # images of the fp generators


def p_quotient(fp: FpPresentation, p: int, c: int, *, steps: Optional[list] = None
               ) -> PcPresentation:
    """Largest quotient of p-class at most ``c`` of the pro-p completion of ``fp``."""
    if c < 1:
        raise ValueError("class must be at least 1")
    d = fp.ngens
    sums = [[x % p for x in fp.exponent_sums(r)] for r in fp.relators]
    R, piv = rref(sums, p, d, order=list(reversed(range(d))))
    kept = [i for i in range(d) if i not in piv]
    Q = PcPresentation.elementary_abelian(p, len(kept))
    images = []
    for x in range(d):
        if x in kept:
            images.append(Q.gen(kept.index(x)))
        else:
            row = R[piv.index(x)]
            images.append(tuple((-row[j]) % p for j in kept))
    eliminated = [x for x in range(d) if x not in kept]
    if steps is not None:
        steps.append(PQuotientStep(Q, images))
    for k in range(1, c):
        n = Q.ngens
        pre, rels = _precover(Q, k + 1, extra=len(eliminated))
        T = len(rels)
        cons = _consistency_rows(pre, n)
        cover, proj, keptc = central_quotient(pre, n, cons)
        lifted = []
        for x in range(d):
            v = list(images[x]) + [0] * (T + len(eliminated))
            if x in eliminated:
                v[n + T + eliminated.index(x)] = 1
            lifted.append(tuple(v[:n]) + tuple(proj(v[n:])))
        rows = []
        for r in fp.relators:
            val = fp.evaluate(r, lifted, cover.mul, cover.inv, cover.identity)
            if any(val[:n]):
                raise PresentationError("relator does not hold in the previous quotient")
            rows.append(list(val[n:]))
        m = cover.ngens - n
        gen_tail_cols = [j for j, t in enumerate(keptc) if t >= T]
        order = gen_tail_cols + [j for j in range(m) if j not in gen_tail_cols]
        Qn, proj2, kept2 = central_quotient(cover, n, rows, order)
        if any(j in gen_tail_cols for j in kept2):
            raise PresentationError("generator images left undetermined by the relators")
        images = [tuple(v[:n]) + tuple(proj2(v[n:])) for v in lifted]
        if Qn.ngens == n:
            log.debug("p-quotient terminated at class %d", k)
            break
        Q = Qn
        if steps is not None:
            steps.append(PQuotientStep(Q, images))
    return Q
