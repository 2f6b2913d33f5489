"""Subgroups of pc-presented p-groups via canonical generating sequences.

A subgroup is stored as its canonical generating sequence (CGS): one element
per leading position ("depth"), leading exponent 1, and zero exponent at the
leading positions of all other members.  The CGS is unique, so it doubles as a
hashable key.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .abelian import AbelianInvariants, canonical, smith_form
from .pcp import Element, PcPresentation


def depth(g: Sequence[int]) -> int:
    for k, x in enumerate(g):
        if x:
            return k
    return len(g)


class _Table:
    """Sifting table used while closing a generating set."""

    def __init__(self, pres: PcPresentation):
        self.pres = pres
        self.rows: dict[int, Element] = {}
        self._inv: dict[int, Element] = {}

    def sift(self, g: Element) -> Element:
        P = self.pres
        n = P.ngens
        while True:
            d = depth(g)
            if d == n or d not in self.rows:
                return g
            if d not in self._inv:
                self._inv[d] = P.inv(self.rows[d])
            g = P.mul(P.pow(self._inv[d], g[d]), g)

    def insert(self, g: Element) -> Element:
        P = self.pres
        d = depth(g)
        lead = g[d]
        if lead != 1:
            g = P.pow(g, pow(lead, -1, P.prime))
        self.rows[d] = g
        return g


def closure(pres: PcPresentation, gens: Iterable[Element],
            normalizers: Sequence[Element] = ()) -> tuple:
    """CGS of the subgroup generated by ``gens``, closed also under conjugation by
    ``normalizers`` (pass the group's generators for a normal closure)."""
    P = pres
    table = _Table(P)
    queue = [g for g in gens if any(g)]
    while queue:
        g = table.sift(queue.pop())
        if not any(g):
            continue
        members = list(table.rows.values())
        g = table.insert(g)
        queue.append(P.pow(g, P.prime))
        for h in members:
            queue.append(P.comm(g, h))
        for x in normalizers:
            queue.append(P.comm(g, x))
    return _canonical(P, table.rows)


def _canonical(P: PcPresentation, rows: dict) -> tuple:
    depths = sorted(rows)
    inv = {d: P.inv(rows[d]) for d in depths}
    out = []
    for d in depths:
        g = rows[d]
        for d2 in depths:
            if d2 > d and g[d2]:
                g = P.mul(g, P.pow(inv[d2], g[d2]))
        out.append(g)
    return tuple(out)


def cgs_depths(cgs: Sequence[Element]) -> list[int]:
    return [depth(g) for g in cgs]


def sift_exponents(P: PcPresentation, cgs: Sequence[Element], g: Element):
    """Write ``g = y_1^e1 y_2^e2 ...`` over the CGS; returns ``(exponents, remainder)``.

    The remainder is the identity exactly when ``g`` lies in the subgroup.
    """
    by_depth = {depth(y): (k, y) for k, y in enumerate(cgs)}
    exps = [0] * len(cgs)
    n = P.ngens
    while True:
        d = depth(g)
        if d == n or d not in by_depth:
            return exps, g
        k, y = by_depth[d]
        exps[k] = g[d]
        g = P.mul(P.inv(P.pow(y, g[d])), g)


def contains(P: PcPresentation, cgs: Sequence[Element], g: Element) -> bool:
    return not any(sift_exponents(P, cgs, g)[1])


def product_of(P: PcPresentation, cgs: Sequence[Element], exps: Sequence[int]) -> Element:
    g = P.identity
    for y, e in zip(cgs, exps):
        if e:
            g = P.mul(g, P.pow(y, e))
    return g


@dataclass(eq=False)
class SubgroupHandle:
    """A subgroup of ``pres`` with its CGS; index and abelianization on demand."""

    pres: PcPresentation
    cgs: tuple
    is_normal: Optional[bool] = None
    _ab: Optional[AbelianInvariants] = field(default=None, repr=False)

    @property
    def generator_words(self) -> tuple:
        return self.cgs

    @property
    def order(self) -> int:
        return self.pres.prime ** len(self.cgs)

    @property
    def index(self) -> int:
        return self.pres.prime ** (self.pres.ngens - len(self.cgs))

    @property
    def key(self) -> tuple:
        return self.cgs

    @property
    def abelianization(self) -> AbelianInvariants:
        if self._ab is None:
            # idempotent cache fill: concurrent writers compute the same value
            self._ab = _abelianization(self.pres, self)
        return self._ab

    def __contains__(self, g) -> bool:
        return contains(self.pres, self.cgs, tuple(g))

    def __eq__(self, other) -> bool:
        return isinstance(other, SubgroupHandle) and self.cgs == other.cgs

    def __hash__(self) -> int:
        return hash(self.cgs)

    def __len__(self) -> int:
        return len(self.cgs)


def subgroup(pres: PcPresentation, gens: Iterable[Element]) -> SubgroupHandle:
    return SubgroupHandle(pres, closure(pres, list(gens)))


def whole(pres: PcPresentation) -> SubgroupHandle:
    return SubgroupHandle(pres, tuple(pres.gen(i) for i in range(pres.ngens)), True)


def trivial(pres: PcPresentation) -> SubgroupHandle:
    return SubgroupHandle(pres, (), True)


def group_generators(pres: PcPresentation) -> list[Element]:
    """Generators of the whole group: the weight-1 pc generators, or all if unweighted."""
    ws = [pres.gen(i) for i in range(pres.ngens) if pres.weights[i] == 1]
    return ws if ws else [pres.gen(i) for i in range(pres.ngens)]


def normal_closure(pres: PcPresentation, gens: Iterable[Element],
                   within: Optional[SubgroupHandle] = None) -> SubgroupHandle:
    conj = list(within.cgs) if within is not None else group_generators(pres)
    return SubgroupHandle(pres, closure(pres, list(gens), conj), True)


def is_normal(pres: PcPresentation, H: SubgroupHandle) -> bool:
    return all(contains(pres, H.cgs, pres.conj(y, x))
               for y in H.cgs for x in group_generators(pres))


def is_abelian(pres: PcPresentation, H: SubgroupHandle) -> bool:
    return all(not any(pres.comm(a, b)) for a, b in itertools.combinations(H.cgs, 2))


def derived_subgroup(pres: PcPresentation, H: SubgroupHandle) -> SubgroupHandle:
    gens = [pres.comm(a, b) for a, b in itertools.combinations(H.cgs, 2)]
    return SubgroupHandle(pres, closure(pres, gens, H.cgs))


def frattini_subgroup(pres: PcPresentation, H: SubgroupHandle) -> SubgroupHandle:
    P = pres
    gens = [P.comm(a, b) for a, b in itertools.combinations(H.cgs, 2)]
    gens += [P.pow(a, P.prime) for a in H.cgs]
    return SubgroupHandle(P, closure(P, gens, H.cgs))


def factor_positions(sub: Sequence[Element], big: Sequence[Element]) -> list[int]:
    """Indices into ``big`` (a CGS) of members whose depth is not a depth of ``sub``."""
    ds = set(cgs_depths(sub))
    return [k for k, y in enumerate(big) if depth(y) not in ds]


def abelian_coordinates(pres: PcPresentation, H: SubgroupHandle):
    """Relation data for ``H/[H,H]`` over the factor elements of H's CGS.

    Returns ``(derived, factor_idx, diag, V, Vinv)``; an element with factor
    coordinates ``x`` (see :func:`factor_coordinates`) has invariant
    coordinates ``(x @ V)[i] mod diag[i]``.
    """
    P = pres
    D = derived_subgroup(P, H)
    fidx = factor_positions(D.cgs, H.cgs)
    rows = []
    for c, k in enumerate(fidx):
        row = [-e for e in factor_coordinates(P, H, D, fidx, P.pow(H.cgs[k], P.prime))]
        row[c] += P.prime
        rows.append(row)
    diag, V, Vinv = smith_form(rows, len(fidx))
    return D, fidx, diag, V, Vinv


def factor_coordinates(pres: PcPresentation, H: SubgroupHandle, D: SubgroupHandle,
                       fidx: Sequence[int], h: Element) -> list[int]:
    """Exponents of ``h [H,H]`` over the factor elements ``H.cgs[k], k in fidx``.

    Sifts through the mixed sequence that uses members of ``D = [H,H]`` at
    the depths of ``D``, so dropping those exponents is a homomorphism.
    """
    ddepth = {depth(z): z for z in D.cgs}
    mixed = [ddepth.get(depth(y), y) for y in H.cgs]
    exps, rem = sift_exponents(pres, mixed, h)
    if any(rem):
        raise ValueError("element is not in the subgroup")
    return [exps[k] for k in fidx]


def subgroup_abelianization(pres: PcPresentation, H: SubgroupHandle) -> AbelianInvariants:
    """Invariants of ``H/[H,H]``; fills the handle's cache."""
    for y in H.cgs:
        for z in H.cgs:
            if not contains(pres, H.cgs, pres.mul(y, z)):
                raise ValueError("generator words are not closed under multiplication")
    H._ab = _abelianization(pres, H)
    return H._ab


def _abelianization(pres: PcPresentation, H: SubgroupHandle) -> AbelianInvariants:
    if not H.cgs:
        return ()
    _, _, diag, _, _ = abelian_coordinates(pres, H)
    return canonical(diag)


def abelian_invariants(pres: PcPresentation) -> AbelianInvariants:
    return _abelianization(pres, whole(pres))


# ------------------------------------------------------------------ series

def p_central_series(pres: PcPresentation) -> list[SubgroupHandle]:
    """``P_0 = G``, ``P_{k+1} = [G, P_k] P_k^p``, down to the trivial subgroup."""
    P = pres
    gens = group_generators(P)
    series = [whole(P)]
    while series[-1].cgs:
        cur = series[-1].cgs
        new = [P.comm(y, x) for y in cur for x in gens] + [P.pow(y, P.prime) for y in cur]
        series.append(SubgroupHandle(P, closure(P, new, gens), True))
        if len(series[-1].cgs) == len(cur):
            raise ValueError("p-central series does not descend; inconsistent presentation?")
    return series


def p_class(pres: PcPresentation) -> int:
    return len(p_central_series(pres)) - 1


def weighted_p_class(pres: PcPresentation) -> int:
    return max(pres.weights, default=0)


def lower_central_series(pres: PcPresentation) -> list[SubgroupHandle]:
    P = pres
    gens = group_generators(P)
    series = [whole(P)]
    while series[-1].cgs:
        cur = series[-1].cgs
        nxt = SubgroupHandle(P, closure(P, [P.comm(y, x) for y in cur for x in gens], gens), True)
        if len(nxt.cgs) == len(cur):
            break
        series.append(nxt)
    return series


# ------------------------------------------------------------------ maximal / low index

def maximal_subgroups(pres: PcPresentation, H: SubgroupHandle) -> list[SubgroupHandle]:
    """All maximal subgroups of ``H`` (preimages of hyperplanes of ``H/Phi(H)``)."""
    P = pres
    p = P.prime
    F = frattini_subgroup(P, H)
    fidx = factor_positions(F.cgs, H.cgs)
    basis = [H.cgs[k] for k in fidx]
    r = len(basis)
    out = []
    for f in _projective_points(p, r):
        # kernel of the functional f on F_p^r
        lead = next(i for i, x in enumerate(f) if x)
        kgens = []
        for i in range(r):
            if i == lead:
                continue
            # e_i - (f_i / f_lead) e_lead
            coef = (-f[i] * pow(f[lead], -1, p)) % p
            g = basis[i]
            if coef:
                g = P.mul(g, P.pow(basis[lead], coef))
            kgens.append(g)
        cg = closure(P, list(F.cgs) + kgens)
        out.append(SubgroupHandle(P, cg))
    return out


def _projective_points(p: int, r: int):
    for v in itertools.product(range(p), repeat=r):
        nz = [x for x in v if x]
        if nz and nz[0] == 1:
            yield v


def conjugate_subgroup(pres: PcPresentation, H: SubgroupHandle, x: Element) -> SubgroupHandle:
    return SubgroupHandle(pres, closure(pres, [pres.conj(y, x) for y in H.cgs]))


def conjugacy_orbit(pres: PcPresentation, H: SubgroupHandle) -> set:
    gens = group_generators(pres)
    seen = {H.cgs}
    todo = [H]
    while todo:
        K = todo.pop()
        for x in gens:
            L = conjugate_subgroup(pres, K, x)
            if L.cgs not in seen:
                seen.add(L.cgs)
                todo.append(L)
    return seen


@dataclass
class SubgroupLattice:
    """Conjugacy-class representatives by index level, with containment incidence.

    ``levels[k]`` lists the classes of index ``p^(k+1)``; ``incidence[k]`` holds
    pairs ``(i, j)`` with class ``i`` of level ``k`` containing a member of
    class ``j`` of level ``k + 1``.
    """

    levels: list
    incidence: list

    def all(self) -> list:
        return [H for lev in self.levels for H in lev]


def _sort_key(H: SubgroupHandle):
    return (H.index, H.abelianization, H.cgs)


def low_index_lattice(pres: PcPresentation, max_index: int) -> SubgroupLattice:
    P = pres
    p = P.prime
    k = 0
    while p ** (k + 1) <= max_index:
        k += 1
    if p ** k != max_index:
        raise ValueError("max_index must be a power of p")
    levels: list = []
    incidence: list = []
    reps = [whole(P)]
    for lev in range(k):
        cands: dict = {}
        for H in reps:
            for M in maximal_subgroups(P, H):
                cands.setdefault(M.cgs, M)
        classes = []
        assigned: dict = {}
        for key in sorted(cands):
            if key in assigned:
                continue
            orb = conjugacy_orbit(P, cands[key])
            ci = len(classes)
            for o in orb:
                assigned[o] = ci
            classes.append((cands[key], orb))
        for ci, (M, orb) in enumerate(classes):
            M.is_normal = len(orb) == 1
        order = sorted(range(len(classes)), key=lambda ci: _sort_key(
            SubgroupHandle(P, min(classes[ci][1]), _ab=classes[ci][0].abelianization)))
        newreps = []
        remap = {}
        for new_i, ci in enumerate(order):
            M, orb = classes[ci]
            rep = SubgroupHandle(P, min(orb), M.is_normal, M.abelianization)
            newreps.append(rep)
            remap[ci] = new_i
        inc = set()
        if lev > 0:
            for ci, (M, orb) in enumerate(classes):
                for pi, H in enumerate(reps):
                    if any(all(contains(P, H.cgs, y) for y in o) for o in orb):
                        inc.add((pi, remap[ci]))
            incidence.append(sorted(inc))
        levels.append(newreps)
        reps = newreps
    return SubgroupLattice(levels, incidence)


def low_index_subgroups(pres: PcPresentation, max_index: int) -> list[SubgroupHandle]:
    return low_index_lattice(pres, max_index).all()


def subgroups_of_index(pres: PcPresentation, index: int) -> list[SubgroupHandle]:
    return low_index_lattice(pres, index).levels[-1]


# ------------------------------------------------------------------ power subgroups

def _abelian_normal_subgroup(P: PcPresentation, H: SubgroupHandle) -> SubgroupHandle:
    """A large abelian normal subgroup of ``H``, grown greedily from the bottom of its CGS."""
    M: tuple = ()
    for y in reversed(H.cgs):
        if contains(P, M, y):
            continue
        cand = closure(P, list(M) + [y], H.cgs)
        if all(not any(P.comm(a, b)) for a, b in itertools.combinations(cand, 2)):
            M = cand
    return SubgroupHandle(P, M)


def power_subgroup_of(pres: PcPresentation, H: SubgroupHandle, n: int,
                      max_transversal: int = 1 << 16) -> SubgroupHandle:
    """The subgroup of ``H`` generated by all n-th powers of its elements.

    With ``M`` abelian normal in ``H`` and ``t`` running over a transversal,
    ``(t m)^n = t^n * prod_i m^(t^i)``, so ``H^n`` is generated by the ``t^n``
    and the images of these norm maps on generators of ``M``.
    """
    P = pres
    M = _abelian_normal_subgroup(P, H)
    fidx = factor_positions(M.cgs, H.cgs)
    if P.prime ** len(fidx) > max_transversal:
        raise MemoryError(f"transversal of size {P.prime}^{len(fidx)} exceeds cap")
    fac = [H.cgs[k] for k in fidx]
    table = _Table(P)
    queue: list = []

    def add(g):
        g = table.sift(g)
        if any(g):
            queue.append(g)
            # close incrementally so later sifts see the growing subgroup
            while queue:
                h = table.sift(queue.pop())
                if not any(h):
                    continue
                members = list(table.rows.values())
                h = table.insert(h)
                queue.append(P.pow(h, P.prime))
                queue.extend(P.comm(h, x) for x in members)
                queue.extend(P.comm(h, x) for x in H.cgs)

    for exps in itertools.product(range(P.prime), repeat=len(fac)):
        t = product_of(P, fac, exps)
        add(P.pow(t, n))
        conjs = [P.pow(t, i) for i in range(n)]
        cinv = [P.inv(c) for c in conjs]
        for m in M.cgs:
            norm = P.identity
            for c, ci in zip(conjs, cinv):
                norm = P.mul(norm, P.mul(ci, P.mul(m, c)))
            add(norm)
    return SubgroupHandle(P, _canonical(P, table.rows), True)


def power_subgroup(pres: PcPresentation, n: int) -> SubgroupHandle:
    return power_subgroup_of(pres, whole(pres), n)
