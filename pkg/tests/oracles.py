"""Independent reference implementations used only by the tests.

None of these reuse the package's collector, Smith form, transfer or orbit
code; they are deliberately naive.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict, deque

import numpy as np
import sympy


# ------------------------------------------------------------ word rewriting

def _word_of(vec):
    return [k for k, e in enumerate(vec) for _ in range(e)]


def rewrite(pres, word):
    """Normal form of a positive word by leftmost rewriting.

    Rules: ``a_j a_i -> a_i a_j w([a_j, a_i])`` for ``j > i`` and
    ``a_i^p -> w(a_i^p)``.
    """
    p = pres.prime
    w = list(word)
    while True:
        changed = False
        run = 1
        for pos in range(len(w) - 1):
            a, b = w[pos], w[pos + 1]
            if a > b:
                tail = _word_of(pres.commutators[a][b])
                w[pos:pos + 2] = [b, a] + tail
                changed = True
                break
            run = run + 1 if a == b else 1
            if run == p:
                start = pos + 2 - p
                w[start:pos + 2] = _word_of(pres.powers[a])
                changed = True
                break
        if not changed:
            break
    vec = [0] * pres.ngens
    for k in w:
        vec[k] += 1
    assert all(e < p for e in vec)
    return tuple(vec)


def all_elements(pres):
    return [tuple(v) for v in itertools.product(range(pres.prime), repeat=pres.ngens)]


def generator_table(pres):
    """``table[x][i]`` = normal form of ``x * a_i`` by rewriting."""
    return {x: [rewrite(pres, _word_of(x) + [i]) for i in range(pres.ngens)] for x in all_elements(pres)}


def closure_table(pres):
    """Full multiplication table built from right multiplication by generators."""
    gt = generator_table(pres)
    table = {}
    for x in gt:
        for y in gt:
            z = x
            for k in _word_of(y):
                z = gt[z][k]
            table[(x, y)] = z
    return table


# ------------------------------------------------------------ cayley tables

class Cayley:
    """A finite group as an index multiplication table."""

    def __init__(self, pres):
        self.pres = pres
        self.elts = all_elements(pres)
        self.index = {x: i for i, x in enumerate(self.elts)}
        n = len(self.elts)
        gt = generator_table(pres)
        gidx = np.array([[self.index[gt[x][k]] for k in range(pres.ngens)] for x in self.elts])
        self.table = np.zeros((n, n), dtype=np.int64)
        for j, y in enumerate(self.elts):
            col = np.arange(n)
            for k in _word_of(y):
                col = gidx[col, k]
            self.table[:, j] = col
        self.e = self.index[tuple([0] * pres.ngens)]
        self.inv = np.array([int(np.nonzero(self.table[i] == self.e)[0][0]) for i in range(n)])

    @property
    def order(self):
        return len(self.elts)

    def mul(self, a, b):
        return int(self.table[a, b])

    def generated(self, gens):
        seen = {self.e}
        todo = [self.e]
        while todo:
            x = todo.pop()
            for g in gens:
                y = self.mul(x, g)
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        return frozenset(seen)

    def element_order(self, a):
        k, x = 1, a
        while x != self.e:
            x = self.mul(x, a)
            k += 1
        return k

    def commutator(self, a, b):
        return self.mul(self.mul(self.inv[a], self.inv[b]), self.mul(a, b))

    def derived(self, H):
        return self.generated([self.commutator(a, b) for a in H for b in H])

    def frattini_gens(self):
        """Elements of ``G^p [G,G]``."""
        p = self.pres.prime
        pw = []
        for a in range(self.order):
            x = self.e
            for _ in range(p):
                x = self.mul(x, a)
            pw.append(x)
        return self.generated(pw + list(self.derived(frozenset(range(self.order)))))

    def subgroups_of_index(self, idx):
        """All subgroups of index ``idx`` by brute-force closure."""
        target = self.order // idx
        found = set()
        layer = {frozenset([self.e])}
        while layer:
            nxt = set()
            for H in layer:
                if len(H) == target:
                    found.add(H)
                    continue
                for g in range(self.order):
                    if g not in H:
                        K = self.generated(list(H) + [g])
                        if len(K) <= target and K not in nxt:
                            nxt.add(K)
            layer = nxt
        return found

    def conjugacy_classes_of(self, subs):
        classes = []
        seen = set()
        for H in sorted(subs, key=lambda s: sorted(s)):
            if H in seen:
                continue
            orb = {frozenset(self.mul(self.mul(self.inv[g], h), g) for h in H) for g in range(self.order)}
            seen |= orb
            classes.append(H)
        return classes


def abelian_invariants_of(cay: Cayley, H) -> tuple:
    """Invariants of ``H/[H,H]`` from element orders in the quotient."""
    D = cay.derived(H)
    cosets = {}
    for h in H:
        cosets.setdefault(frozenset(cay.mul(h, d) for d in D), h)
    reps = list(cosets.values())
    key = {}
    for c, h in cosets.items():
        for x in c:
            key[x] = c
    p = cay.pres.prime
    counts = Counter()
    for h in reps:
        k, x = 0, h
        while key[x] != key[cay.e]:
            xx = x
            for _ in range(p - 1):
                xx = cay.mul(xx, x)
            x = xx
            k += 1
        counts[k] += 1
    # number of elements of order dividing p^k
    cum = {}
    total = 0
    for k in range(max(counts) + 1):
        total += counts[k]
        cum[k] = total
    return invariants_from_order_counts(cum, p)


def invariants_from_order_counts(cum: dict, p: int) -> tuple:
    logs = {}
    for k, c in cum.items():
        e = 0
        while c > 1:
            c //= p
            e += 1
        logs[k] = e
    kmax = max(logs)
    out = []
    for k in range(1, kmax + 1):
        ge_k = logs[k] - logs[k - 1]
        ge_k1 = (logs[k + 1] - logs[k]) if k + 1 in logs else 0
        out += [p ** k] * (ge_k - ge_k1)
    return tuple(sorted(out))


# ------------------------------------------------------------- smith form

def sympy_invariants(rows, ncols) -> tuple:
    """Abelian invariants of ``Z^ncols / rowspace`` via sympy."""
    from sympy.matrices.normalforms import smith_normal_form
    if not rows:
        return tuple([0] * ncols)
    M = sympy.Matrix(rows)
    S = smith_normal_form(M, domain=sympy.ZZ)
    diag = [abs(S[i, i]) for i in range(min(S.shape))]
    diag += [0] * (ncols - len(diag))
    return tuple(sorted(int(d) for d in diag if d != 1))



def abelianized_relations(pres) -> list:
    """Rows of the relation matrix of ``G^ab`` read off the pc relations."""
    p = pres.prime
    rows = []
    for i, v in enumerate(pres.powers):
        rows.append([p * int(k == i) - v[k] for k in range(pres.ngens)])
    for j in range(pres.ngens):
        for v in pres.commutators[j]:
            if any(v):
                rows.append([-x for x in v])
    return rows

# --------------------------------------------------------------- transfer

def brute_transfer_images(cay: Cayley, H, g, reps):
    """``prod_t h(t, g)`` as an element of ``H`` for left transversal ``reps``."""
    coset_of = {}
    for t in reps:
        for h in H:
            coset_of[cay.mul(t, h)] = t
    acc = cay.e
    for t in reps:
        gt = cay.mul(g, t)
        t2 = coset_of[gt]
        acc = cay.mul(acc, cay.mul(cay.inv[t2], gt))
    return acc


def left_transversal(cay: Cayley, H, rng):
    """A left transversal with random choices of representatives."""
    left = set(range(cay.order))
    reps = []
    while left:
        x = rng.choice(sorted(left))
        coset = {cay.mul(x, h) for h in H}
        reps.append(rng.choice(sorted(coset)))
        left -= coset
    return reps


# ----------------------------------------------------------- isomorphism

def order_statistics(cay: Cayley) -> tuple:
    return tuple(sorted(Counter(cay.element_order(a) for a in range(cay.order)).items()))


def isomorphic(A: Cayley, B: Cayley) -> bool:
    """Brute-force isomorphism test for groups generated by their pc generators."""
    if A.order != B.order or order_statistics(A) != order_statistics(B):
        return False
    pa = A.pres
    gens = [A.index[tuple(int(i == k) for i in range(pa.ngens))] for k in range(pa.dgens)]
    # BFS words for every element of A over the chosen generators
    parent = {A.e: None}
    order = [A.e]
    q = deque([A.e])
    while q:
        x = q.popleft()
        for s, g in enumerate(gens):
            y = A.mul(x, g)
            if y not in parent:
                parent[y] = (x, s)
                order.append(y)
                q.append(y)
    fratt = B.frattini_gens()
    cands = [b for b in range(B.order) if b not in fratt]
    for imgs in itertools.product(cands, repeat=len(gens)):
        if len(B.generated(list(imgs))) != B.order:
            continue
        phi = {A.e: B.e}
        for y in order[1:]:
            x, s = parent[y]
            phi[y] = B.mul(phi[x], imgs[s])
        ok = True
        for x in order:
            for s, g in enumerate(gens):
                if phi[A.mul(x, g)] != B.mul(phi[x], imgs[s]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return True
    return False


# ------------------------------------------------------ allowable subspaces

def gf_rank(rows, p):
    M = [list(r) for r in rows]
    rank, col = 0, 0
    ncols = len(M[0]) if M else 0
    while rank < len(M) and col < ncols:
        piv = next((r for r in range(rank, len(M)) if M[r][col] % p), None)
        if piv is None:
            col += 1
            continue
        M[rank], M[piv] = M[piv], M[rank]
        inv = pow(M[rank][col], -1, p)
        M[rank] = [(x * inv) % p for x in M[rank]]
        for r in range(len(M)):
            if r != rank and M[r][col] % p:
                f = M[r][col]
                M[r] = [(a - f * b) % p for a, b in zip(M[r], M[rank])]
        rank += 1
        col += 1
    return rank


def subspaces(m, dim, p):
    """All subspaces of ``F_p^m`` of dimension ``dim`` (as frozensets of vectors)."""
    vecs = [v for v in itertools.product(range(p), repeat=m) if any(v)]
    seen = set()
    for basis in itertools.combinations(vecs, dim):
        if gf_rank(basis, p) < dim:
            continue
        span = frozenset(
            tuple(sum(c * b[i] for c, b in zip(coef, basis)) % p for i in range(m))
            for coef in itertools.product(range(p), repeat=dim))
        if span not in seen:
            seen.add(span)
            yield span


def allowable_subspaces(m, nucleus, codim, p):
    """Subspaces ``U`` of codimension ``codim`` with ``U + N = M``, as bases."""
    out = []
    for U in subspaces(m, m - codim, p):
        rows = [list(v) for v in U if any(v)]
        if gf_rank(rows + [list(r) for r in nucleus], p) == m:
            basis = []
            for v in sorted(U):
                if any(v) and gf_rank(basis + [list(v)], p) > len(basis):
                    basis.append(list(v))
            out.append(basis)
    return out


def iso_key(cay: Cayley) -> tuple:
    """Cheap isomorphism invariants used to bucket candidates before the full test."""
    full = frozenset(range(cay.order))
    return (cay.order, order_statistics(cay), abelian_invariants_of(cay, full), len(cay.derived(full)))


def descendant_mismatches(G, max_log: int) -> list:
    """Compare ``immediate_descendants`` of ``G`` with the exhaustive oracle.

    Every allowable subspace of each step is turned into a quotient of the
    covering group, the quotients are sorted into isomorphism classes by
    brute force, and the classes are matched one-to-one with the computed
    children.  Children of order above ``p^max_log`` are not compared.
    """
    from pgtower.cover import p_covering_group, quotient_of_cover
    from pgtower.descendants import immediate_descendants

    cd = p_covering_group(G)
    budget = max_log - G.ngens
    ours = immediate_descendants(G, max_step=budget)
    out = []
    for step in range(1, min(budget, cd.nuclear_rank) + 1):
        classes = defaultdict(list)
        for U in allowable_subspaces(cd.multiplicator_rank, cd.nucleus, step, G.prime):
            cay = Cayley(quotient_of_cover(cd, U))
            bucket = classes[iso_key(cay)]
            if not any(isomorphic(cay, other) for other in bucket):
                bucket.append(cay)
        oracle = [c for bucket in classes.values() for c in bucket]
        mine = [Cayley(ch.presentation) for ch in ours if ch.step == step]
        if len(mine) != len(oracle):
            out.append((step, "count", len(mine), len(oracle)))
            continue
        for a in mine:
            hits = sum(1 for o in oracle if iso_key(o) == iso_key(a) and isomorphic(a, o))
            if hits != 1:
                out.append((step, "class", hits))
    return out
