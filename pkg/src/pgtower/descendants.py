"""Immediate descendants: orbits of allowable subgroups of the multiplicator.

A child of ``G`` is ``G*/U`` for a proper subspace ``U`` of the multiplicator
``M`` with ``U + N = M`` (``N`` the nucleus).  We work with annihilators:
``S = U^perp`` is a nonzero subspace of the dual space with ``S`` meeting
``N^perp`` trivially.  Subspaces are grown one vector at a time; at each
dimension we keep one canonical representative per orbit of the
automorphism group, together with its stabiliser, so the candidates for the
next dimension are orbit representatives of the stabiliser only.

The canonical form of a subspace is the least reduced echelon basis over
its whole orbit; this is also the de-duplication certificate of a child.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .autos import LiftedAction, automorphism_generators, child_automorphisms
from .cover import CoveringData, p_covering_group, quotient_of_cover
from .linalg import nullspace, rref
from .matgroup import BitAction, CapExceeded, batched_rref, pack_rows, unpack
from .pcp import PcPresentation, dumps

DEFAULT_MAX_NGENS = 96


class TerminalGroup(ValueError):
    """The group has nuclear rank 0 and therefore no descendants."""


class SizeCapExceeded(CapExceeded):
    pass


def presentation_id(pres: PcPresentation) -> str:
    return hashlib.sha256(dumps(pres).encode()).hexdigest()[:16]


@dataclass
class Child:
    presentation: PcPresentation
    annihilator: list  # basis of S, rows in multiplicator coordinates
    allowable: list    # basis of U = S^perp
    step: int
    certificate: str
    automorphisms: Optional[list] = None


@dataclass
class DescendantBatch:
    parent_id: str
    children: list = field(default_factory=list)
    multiplicator_rank: int = 0
    nuclear_rank: int = 0

    @property
    def dedup_certificates(self) -> list[str]:
        return [c.certificate for c in self.children]

    def __len__(self) -> int:
        return len(self.children)

    def __iter__(self):
        return iter(self.children)


# ---------------------------------------------------------------- backends

class _Bits:
    """Subspaces over GF(2) as tuples of packed integers."""

    def __init__(self, lifted: LiftedAction, nucleus: list, m: int):
        self.m = m
        self.act = BitAction(lifted.group, dual=True)
        self.nuc = [int(x) for x in pack_rows(np.array(nucleus, dtype=np.int64).reshape(-1, m))]
        self.n = len(self.nuc)

    def restrict(self, vecs: np.ndarray) -> np.ndarray:
        out = np.zeros(len(vecs), dtype=np.int64)
        for j, nj in enumerate(self.nuc):
            bit = np.bitwise_count(vecs & nj).astype(np.int64) & 1
            out |= bit << (self.n - 1 - j)
        return out

    def candidates(self, basis: tuple) -> np.ndarray:
        m = self.m
        pivots = {int(x).bit_length() - 1 for x in basis}
        free = [b for b in range(m - 1, -1, -1) if b not in pivots]
        f = len(free)
        codes = np.arange(1, 1 << f, dtype=np.int64)
        out = np.zeros_like(codes)
        for j, b in enumerate(free):
            out |= ((codes >> (f - 1 - j)) & 1) << b
        return out

    def reduce(self, W: np.ndarray, basis: tuple) -> np.ndarray:
        for r in basis:
            lead = 1 << (int(r).bit_length() - 1)
            W = np.where(W & lead, W ^ r, W)
        return W

    def allowable(self, basis: tuple, V: np.ndarray) -> np.ndarray:
        rb = []
        for x in self.restrict(np.array(basis, dtype=np.int64)) if basis else []:
            x = int(x)
            for r in rb:
                if x ^ r < x:
                    x ^= r
            if x:
                rb.append(x)
                rb.sort(reverse=True)
        rv = self.restrict(V)
        for r in sorted(rb, reverse=True):
            lead = 1 << (r.bit_length() - 1)
            rv = np.where(rv & lead, rv ^ r, rv)
        return rv != 0

    def orbit_labels(self, basis: tuple, V: np.ndarray, stab: np.ndarray) -> np.ndarray:
        label = V.copy()
        chunk = max(1, (1 << 22) // max(1, len(V)))
        for s in range(0, len(stab), chunk):
            W = self.reduce(self.act.image(V, stab[s:s + chunk]), basis)
            label = np.minimum(label, W.min(axis=0))
        return label

    def extend(self, basis: tuple, v: int) -> np.ndarray:
        return np.array(list(basis) + [int(v)], dtype=np.int64)

    def canonical(self, B: np.ndarray) -> tuple:
        return tuple(int(x) for x in self.act.canonical(B))

    def stabilizer(self, basis: tuple) -> np.ndarray:
        return self.act.stabilizer(np.array(basis, dtype=np.int64))

    def matrix(self, basis: tuple) -> list:
        return [unpack(x, self.m) for x in basis]

    def certificate(self, basis: tuple) -> str:
        width = (self.m + 3) // 4
        return ".".join(format(x, f"0{width}x") for x in basis)


class _Arrays:
    """Subspaces over GF(p) as tuples of row tuples (slow generic path)."""

    def __init__(self, lifted: LiftedAction, nucleus: list, m: int):
        self.p = lifted.cd.parent.prime
        self.m = m
        self.group = lifted.group
        self.nuc = np.array(nucleus, dtype=np.int64).reshape(-1, m)
        self.inv = np.array([0] + [pow(x, -1, self.p) for x in range(1, self.p)], dtype=np.int64)

    def _normalise(self, W: np.ndarray) -> np.ndarray:
        nz = W != 0
        first = nz.argmax(axis=-1)
        lead = np.take_along_axis(W, first[..., None], axis=-1)
        return (W * self.inv[lead]) % self.p

    def _encode(self, W: np.ndarray) -> np.ndarray:
        pw = self.p ** np.arange(self.m - 1, -1, -1, dtype=np.int64)
        return (W * pw).sum(axis=-1)

    def _decode(self, code: int) -> np.ndarray:
        out = []
        for _ in range(self.m):
            out.append(code % self.p)
            code //= self.p
        return np.array(out[::-1], dtype=np.int64)

    def candidates(self, basis: tuple) -> np.ndarray:
        p, m = self.p, self.m
        piv = {next(j for j, x in enumerate(r) if x) for r in basis}
        free = [j for j in range(m) if j not in piv]
        out = []
        for lead_pos, j in enumerate(free):
            rest = free[lead_pos + 1:]
            for tail in np.ndindex(*([p] * len(rest))):
                v = np.zeros(m, dtype=np.int64)
                v[j] = 1
                v[rest] = tail
                out.append(v)
        return np.array(out, dtype=np.int64).reshape(-1, m)

    def reduce(self, W: np.ndarray, basis: tuple) -> np.ndarray:
        for r in basis:
            r = np.array(r, dtype=np.int64)
            c = int(np.nonzero(r)[0][0])
            W = (W - W[..., c:c + 1] * r) % self.p
        return W

    def allowable(self, basis: tuple, V: np.ndarray) -> np.ndarray:
        RN = (np.array(basis, dtype=np.int64).reshape(-1, self.m) @ self.nuc.T) % self.p
        R, piv = rref(RN.tolist(), self.p, self.nuc.shape[0])
        VN = (V @ self.nuc.T) % self.p
        for row, c in zip(R, piv):
            VN = (VN - VN[:, c:c + 1] * np.array(row)) % self.p
        return VN.any(axis=1)

    def orbit_labels(self, basis: tuple, V: np.ndarray, stab: np.ndarray) -> np.ndarray:
        label = self._encode(V)
        E = self.group.elements.astype(np.int64)
        for g in stab:
            W = self._normalise(self.reduce((V @ E[g].T) % self.p, basis))
            label = np.minimum(label, self._encode(W))
        return label

    def extend(self, basis: tuple, v) -> np.ndarray:
        v = self._decode(int(v)) if np.ndim(v) == 0 else v
        return np.array(list(basis) + [list(v)], dtype=np.int64)

    def canonical(self, B: np.ndarray) -> tuple:
        C = self.group.canonical(B, transpose=True)
        return tuple(tuple(int(x) for x in r) for r in C)

    def stabilizer(self, basis: tuple) -> np.ndarray:
        return self.group.stabilizer(np.array(basis, dtype=np.int64), transpose=True)

    def matrix(self, basis: tuple) -> list:
        return [list(r) for r in basis]

    def certificate(self, basis: tuple) -> str:
        return ".".join("".join(str(x) for x in r) for r in basis)


def _backend(lifted: LiftedAction, cd: CoveringData):
    m = cd.multiplicator_rank
    if cd.parent.prime == 2 and m <= 62:
        return _Bits(lifted, cd.nucleus, m)
    return _Arrays(lifted, cd.nucleus, m)


# ------------------------------------------------------------- enumeration

def allowable_orbits(cd: CoveringData, lifted: LiftedAction, stabilizers: bool = False,
                     max_step: Optional[int] = None):
    """Canonical orbit representatives of annihilators, by dimension.

    Yields ``(dimension, basis, stabiliser_indices, backend)``.  Stabilisers
    of the top dimension are only computed when ``stabilizers`` is set
    (otherwise ``None`` is yielded for them).
    """
    be = _backend(lifted, cd)
    reps = [((), np.arange(len(lifted.group)))]
    n = cd.nuclear_rank if max_step is None else min(max_step, cd.nuclear_rank)
    for k in range(n):
        found: dict = {}
        for basis, stab in reps:
            V = be.candidates(basis)
            if len(V) == 0:
                continue
            V = V[be.allowable(basis, V)]
            labels = np.unique(be.orbit_labels(basis, V, stab))
            for v in labels:
                key = be.canonical(be.extend(basis, v))
                if key not in found:
                    found[key] = None
        reps = []
        last = k + 1 == n
        for key in sorted(found):
            stab = be.stabilizer(key) if stabilizers or not last else None
            reps.append((key, stab))
            yield k + 1, key, stab, be


def _lifted_action(pres: PcPresentation, cd: CoveringData, automorphisms) -> LiftedAction:
    auts = automorphisms if automorphisms is not None else automorphism_generators(pres)
    return LiftedAction(cd, auts)


def iter_descendants(pres: PcPresentation, automorphisms=None, *,
                     with_automorphisms: bool = False,
                     cover: Optional[CoveringData] = None,
                     max_step: Optional[int] = None):
    """Stream the children of :func:`immediate_descendants` in its order."""
    cd = cover or p_covering_group(pres)
    if cd.nuclear_rank == 0:
        return
    lifted = _lifted_action(pres, cd, automorphisms)
    p, m = pres.prime, cd.multiplicator_rank
    for k, basis, stab, be in allowable_orbits(cd, lifted, with_automorphisms, max_step):
        S = be.matrix(basis)
        U = nullspace(S, p, m)
        child = quotient_of_cover(cd, U)
        auts = None
        if with_automorphisms:
            auts = child_automorphisms(lifted, child, lifted.stabilizer_from_indices(stab))
        yield Child(child, S, U, k, f"{k}:{be.certificate(basis)}", auts)


def immediate_descendants(pres: PcPresentation, automorphisms=None, *,
                          with_automorphisms: bool = False,
                          cover: Optional[CoveringData] = None,
                          max_step: Optional[int] = None) -> DescendantBatch:
    """One child per isomorphism class of immediate descendants of ``pres``.

    ``automorphisms`` is a generating set of Aut(pres) (computed when None).
    With ``with_automorphisms`` each child carries generators of its own
    automorphism group so that the tree can be walked further cheaply.
    ``max_step`` bounds the order increase ``log_p |child| - log_p |parent|``.
    """
    cd = cover or p_covering_group(pres)
    batch = DescendantBatch(presentation_id(pres), [], cd.multiplicator_rank, cd.nuclear_rank)
    batch.children.extend(iter_descendants(pres, automorphisms, with_automorphisms=with_automorphisms,
                                           cover=cd, max_step=max_step))
    return batch


def is_terminal(pres: PcPresentation) -> bool:
    return p_covering_group(pres).nuclear_rank == 0


# ------------------------------------------------------------ random children

def _gaussian_binomial(n: int, k: int, p: int) -> int:
    num = den = 1
    for i in range(k):
        num *= p ** (n - i) - 1
        den *= p ** (i + 1) - 1
    return num // den


def _inverse_mod(M: np.ndarray, p: int) -> np.ndarray:
    n = len(M)
    aug = [[int(x) for x in M[i]] + [int(i == j) for j in range(n)] for i in range(n)]
    R, piv = rref(aug, p, 2 * n, order=list(range(n)))
    if piv != list(range(n)):
        raise ValueError("singular matrix")
    return np.array([r[n:] for r in R], dtype=np.int64)


def random_children(pres: PcPresentation, k: int, seed: int,
                    cover: Optional[CoveringData] = None) -> list[PcPresentation]:
    """``k`` children drawn uniformly from the allowable subgroups (with repetition)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    cd = cover or p_covering_group(pres)
    n, m, p = cd.nuclear_rank, cd.multiplicator_rank, pres.prime
    if n == 0:
        raise TerminalGroup("terminal group has no children")
    rng = np.random.default_rng(seed)
    # basis of M adapted to the nucleus: nucleus rows first, then unit vectors
    _, piv = rref(cd.nucleus, p, m)
    comp = [[int(i == j) for j in range(m)] for i in range(m) if i not in piv]
    P = np.array(list(cd.nucleus) + comp, dtype=np.int64)
    to_std = _inverse_mod(P.T % p, p)
    dims = list(range(1, n + 1))
    weights = np.array([_gaussian_binomial(n, j, p) * p ** (j * (m - n)) for j in dims], dtype=float)
    weights /= weights.sum()
    out = []
    for _ in range(k):
        j = int(rng.choice(dims, p=weights))
        while True:
            Y = rng.integers(0, p, size=(j, n))
            if len(rref(Y.tolist(), p, n)[0]) == j:
                break
        X = rng.integers(0, p, size=(j, m - n))
        S = (np.hstack([Y, X]) @ to_std) % p
        U = nullspace(S.tolist(), p, m)
        out.append(quotient_of_cover(cd, U))
    return out


def count_allowable(pres_or_cover) -> int:
    cd = pres_or_cover if isinstance(pres_or_cover, CoveringData) else p_covering_group(pres_or_cover)
    n, m, p = cd.nuclear_rank, cd.multiplicator_rank, cd.parent.prime
    return sum(_gaussian_binomial(n, j, p) * p ** (j * (m - n)) for j in range(1, n + 1))


# ----------------------------------------------------------------- moribund

@dataclass
class MoribundVerdict:
    verdict: str          # "moribund" or "unknown"
    depth: Optional[int]  # iterate at which nuclear rank 0 was seen
    orders: list          # log_p orders of the iterates examined


def is_moribund(pres: PcPresentation, max_depth: int,
                max_ngens: int = DEFAULT_MAX_NGENS) -> MoribundVerdict:
    """One-sided test: some iterated p-covering group has nuclear rank 0.

    Raises :class:`SizeCapExceeded` when an iterate would exceed ``max_ngens``.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    G = pres
    orders = []
    trust = True
    for depth in range(max_depth + 1):
        orders.append(G.ngens)
        cd = p_covering_group(G, trust_weights=trust)
        if cd.nuclear_rank == 0:
            return MoribundVerdict("moribund", depth, orders)
        if depth == max_depth:
            break
        if cd.cover.ngens > max_ngens:
            raise SizeCapExceeded(f"iterate {depth + 1} has {cd.cover.ngens} generators, cap is {max_ngens}")
        G = cd.cover
        trust = False
    return MoribundVerdict("unknown", None, orders)


def expected_coupon_draws(k: int) -> float:
    """Expected uniform draws needed to see all of ``k`` equally likely outcomes."""
    return k * sum(1 / i for i in range(1, k + 1)) if k else 0.0


def coupon_estimate(k: int) -> float:
    return k * math.log(k) if k > 1 else float(k)
