"""Automorphisms of pc groups, given by images of the defining generators.

An automorphism is a tuple of ``d`` elements: the images of the weight-1
generators.  Images of the remaining generators follow from their recorded
definitions.  Generating sets for the full automorphism group are obtained by
rebuilding the group one p-class at a time from the elementary abelian root
and lifting stabilisers, which is exactly what descendant generation needs.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .cover import CoveringData, p_covering_group, quotient_of_cover
from .linalg import nullspace, rank
from .matgroup import CapExceeded, MatrixGroup
from .pcp import PcPresentation, PresentationError

Automorphism = tuple  # images of the d defining generators


def _check_layout(pres: PcPresentation) -> int:
    d = pres.dgens
    if any(w != 1 for w in pres.weights[:d]) or any(pres.definitions[i] for i in range(d)):
        raise PresentationError("defining generators must come first")
    return d


def word_image(target: PcPresentation, imgs: Sequence, v: Sequence[int]):
    out = list(target.identity)
    for k, e in enumerate(v):
        if e:
            img = imgs[k]
            for _ in range(e):
                target._mul_into(out, img)
    return tuple(out)


def extend_images(source: PcPresentation, target: PcPresentation, defimgs: Sequence) -> list:
    """Images of all pc generators of ``source`` under the map fixing ``defimgs``.

    Only the definitions are used, so the map is a homomorphism exactly when
    the remaining relations of ``source`` hold for the images.
    """
    d = _check_layout(source)
    p = source.prime
    imgs = [tuple(x) for x in defimgs]
    if len(imgs) != d:
        raise ValueError(f"expected {d} images")
    for k in range(d, source.ngens):
        df = source.definitions[k]
        if df[0] == "pow":
            i = df[1]
            val = target.pow(imgs[i], p)
            rel = source.powers[i]
        else:
            _, j, i = df
            val = target.comm(imgs[j], imgs[i])
            rel = source.commutators[j][i]
        w = word_image(target, imgs, rel[:k])
        imgs.append(target.mul(target.inv(w), val))
    return imgs


def is_homomorphism(source: PcPresentation, target: PcPresentation, defimgs) -> bool:
    imgs = extend_images(source, target, defimgs)
    p = source.prime
    for i in range(source.ngens):
        if target.pow(imgs[i], p) != word_image(target, imgs, source.powers[i]):
            return False
        for j in range(i + 1, source.ngens):
            if target.comm(imgs[j], imgs[i]) != word_image(target, imgs, source.commutators[j][i]):
                return False
    return True


def is_automorphism(pres: PcPresentation, aut: Automorphism) -> bool:
    d = pres.dgens
    if rank([list(g[:d]) for g in aut], pres.prime, d) != d:
        return False
    return is_homomorphism(pres, pres, aut)


def identity_automorphism(pres: PcPresentation) -> Automorphism:
    return tuple(pres.gen(i) for i in range(pres.dgens))


def apply(pres: PcPresentation, aut: Automorphism, g):
    return word_image(pres, extend_images(pres, pres, aut), g)


def compose(pres: PcPresentation, a: Automorphism, b: Automorphism) -> Automorphism:
    """``a o b`` (apply ``b`` first)."""
    imgs = extend_images(pres, pres, a)
    return tuple(word_image(pres, imgs, g) for g in b)


def inverse(pres: PcPresentation, a: Automorphism, cap: int = 1 << 16) -> Automorphism:
    one = identity_automorphism(pres)
    prev, cur = one, a
    for _ in range(cap):
        if cur == one:
            return prev
        prev, cur = cur, compose(pres, a, cur)
    raise CapExceeded("automorphism order exceeds cap")


# ------------------------------------------------------------ generating sets

def gl_generators(p: int, d: int) -> list[np.ndarray]:
    """Generators of GL(d, p) as integer matrices acting on row vectors."""
    if d == 0:
        return []
    out = []
    if p > 2:
        g = next(x for x in range(2, p) if all(pow(x, (p - 1) // q, p) != 1
                                               for q in _prime_factors(p - 1)))
        D = np.eye(d, dtype=np.int64)
        D[0, 0] = g
        out.append(D)
    if d >= 2:
        T = np.eye(d, dtype=np.int64)
        T[0, 1] = 1
        out.append(T)
        C = np.roll(np.eye(d, dtype=np.int64), 1, axis=0)
        out.append(C)
    return out


def _prime_factors(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def matrix_automorphism(pres: PcPresentation, M) -> Automorphism:
    """Automorphism of an elementary abelian group from a d x d matrix."""
    return tuple(tuple(int(x) % pres.prime for x in row) for row in np.asarray(M))


def central_automorphisms(pres: PcPresentation) -> list[Automorphism]:
    """``a_i -> a_i t`` for defining generators ``a_i`` and top-weight generators ``t``."""
    if pres.ngens == pres.dgens:
        return []
    c = max(pres.weights)
    top = [k for k in range(pres.ngens) if pres.weights[k] == c]
    base = identity_automorphism(pres)
    out = []
    for i in range(pres.dgens):
        for t in top:
            imgs = list(base)
            imgs[i] = pres.mul(imgs[i], pres.gen(t))
            out.append(tuple(imgs))
    return out


# ------------------------------------------------------- multiplicator action

def multiplicator_action(cd: CoveringData, aut: Automorphism) -> np.ndarray:
    """Matrix of the induced action on ``R/R*`` (rows are images of tails)."""
    cover, n = cd.cover, cd.offset
    pad = (0,) * cd.multiplicator_rank
    imgs = extend_images(cover, cover, [tuple(g) + pad for g in aut])
    rows = []
    for t in range(n, cover.ngens):
        v = imgs[t]
        if any(v[:n]):
            raise PresentationError("tail image left the multiplicator")
        rows.append(v[n:])
    return np.array(rows, dtype=np.int64).reshape(cd.multiplicator_rank, cd.multiplicator_rank)


class LiftedAction:
    """Automorphism generators of a parent together with their image group on
    the multiplicator of its cover."""

    def __init__(self, cd: CoveringData, auts: Sequence[Automorphism], cap: int = 2_000_000):
        self.cd = cd
        self.auts = list(auts)
        mats = [multiplicator_action(cd, a) for a in self.auts]
        self.group = MatrixGroup(cd.parent.prime, cd.multiplicator_rank, mats, cap=cap)
        self._kernel = None

    def preimage(self, idx: int) -> Automorphism:
        pres = self.cd.parent
        out = identity_automorphism(pres)
        for s in self.group.word(idx):
            out = compose(pres, self.auts[s], out)
        return out

    def kernel_generators(self, cap: int = 4096) -> list[Automorphism]:
        """Generators of the automorphisms acting trivially on the multiplicator."""
        if self._kernel is not None:
            return self._kernel
        pres = self.cd.parent
        G = self.group
        one = identity_automorphism(pres)
        inv_gens = [inverse(pres, a) for a in self.auts]
        pre = [one] * len(G)
        preinv = [one] * len(G)
        for y in range(1, len(G)):
            x, s = G.parent[y]
            pre[y] = compose(pres, self.auts[s], pre[x])
            preinv[y] = compose(pres, preinv[x], inv_gens[s])
        gen_idx = [G.index[A.astype(G.dtype).tobytes()] for A in G.gens]
        found: list[Automorphism] = []
        closed = {one}
        for x in range(len(G)):
            for s, a in enumerate(self.auts):
                y = G.mul_index(x, gen_idx[s])
                if G.parent[y] == (x, s):
                    continue
                k = compose(pres, preinv[y], compose(pres, a, pre[x]))
                if k in closed:
                    continue
                found.append(k)
                if len(closed) <= cap:
                    closed = _close(pres, closed, found, cap)
                else:
                    closed.add(k)
        self._kernel = found
        return found

    def stabilizer_generators(self, U_basis) -> list[Automorphism]:
        """Generators of the stabiliser of a subspace (in multiplicator coordinates)."""
        idx = self.group.stabilizer(np.asarray(U_basis, dtype=np.int64).reshape(-1, self.cd.multiplicator_rank))
        return self.stabilizer_from_indices(idx)

    def stabilizer_from_indices(self, idx) -> list[Automorphism]:
        gens = [self.preimage(i) for i in self.group.generating_subset(idx)]
        return gens + self.kernel_generators()


def _close(pres, closed: set, gens: list, cap: int) -> set:
    out = set(closed)
    todo = list(out)
    while todo:
        x = todo.pop()
        for g in gens:
            y = compose(pres, g, x)
            if y not in out:
                out.add(y)
                todo.append(y)
                if len(out) > cap:
                    return out
    return out


def lift_to_quotient(child: PcPresentation, aut: Automorphism) -> Automorphism:
    pad = (0,) * (child.ngens - len(aut[0]))
    return tuple(tuple(g) + pad for g in aut)


def child_automorphisms(lifted: LiftedAction, child: PcPresentation, stab_gens) -> list:
    out = [lift_to_quotient(child, a) for a in stab_gens]
    out += central_automorphisms(child)
    one = identity_automorphism(child)
    seen, uniq = set(), []
    for a in out:
        if a != one and a not in seen:
            seen.add(a)
            uniq.append(a)
    return uniq


# --------------------------------------------------------- full automorphisms

def automorphism_generators(pres: PcPresentation) -> list[Automorphism]:
    """Generators of Aut(G) for a consistent weighted pc presentation."""
    d = _check_layout(pres)
    p = pres.prime
    E = PcPresentation.elementary_abelian(p, d)
    auts = [matrix_automorphism(E, M) for M in gl_generators(p, d)]
    Q = E
    c = max(pres.weights, default=0)
    for k in range(1, c):
        cd = p_covering_group(Q)
        T = pres.truncate(k + 1)
        imgs = extend_images(cd.cover, T, [T.gen(i) for i in range(d)])
        n = cd.offset
        m = cd.multiplicator_rank
        cols = [list(imgs[n + t]) for t in range(m)]
        U = nullspace([[cols[t][s] for t in range(m)] for s in range(T.ngens)], p, m)
        Qn = quotient_of_cover(cd, U)
        if Qn.ngens != T.ngens:
            raise PresentationError("presentation is not a descendant of its truncation")
        lifted = LiftedAction(cd, auts)
        auts = child_automorphisms(lifted, Qn, lifted.stabilizer_generators(U))
        Q = Qn
    if Q is pres:
        return auts
    iso = extend_images(Q, pres, [pres.gen(i) for i in range(d)])
    return [tuple(word_image(pres, iso, g) for g in a) for a in auts]


def brute_force_automorphisms(pres: PcPresentation) -> list[Automorphism]:
    """Every automorphism, by trying all image tuples; tiny groups only."""
    d = pres.dgens
    elems = list(itertools.product(range(pres.prime), repeat=pres.ngens))
    out = []
    for imgs in itertools.product(elems, repeat=d):
        if is_automorphism(pres, imgs):
            out.append(tuple(imgs))
    return out
