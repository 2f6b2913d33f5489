"""Finite matrix groups over F_p acting on subspaces, vectorised with numpy.

Matrices act on row vectors (``v -> v @ A``).  A group is enumerated
completely; every element remembers the BFS edge that produced it so that a
preimage in an abstract group can be reconstructed.
"""

from __future__ import annotations

import numpy as np


class CapExceeded(RuntimeError):
    """A configured size cap was hit; distinct from an ordinary negative answer."""


def batched_rref(A: np.ndarray, p: int) -> np.ndarray:
    """Row-reduce a batch of ``(B, k, m)`` matrices of full row rank ``k`` in place."""
    A = A % p
    B, k, m = A.shape
    if k == 0 or B == 0:
        return A
    inv = np.zeros(p, dtype=A.dtype)
    for x in range(1, p):
        inv[x] = pow(x, -1, p)
    r = np.zeros(B, dtype=np.int64)
    rows = np.arange(k)
    ar = np.arange(B)
    for col in range(m):
        cand = (A[:, :, col] != 0) & (rows[None, :] >= r[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        g = ar[has]
        piv = cand[g].argmax(axis=1)
        rb = r[g]
        top = A[g, rb].copy()
        A[g, rb] = A[g, piv]
        A[g, piv] = top
        if p != 2:
            lead = A[g, rb, col]
            A[g, rb] = (A[g, rb] * inv[lead][:, None]) % p
        prow = A[g, rb]  # (b, m)
        f = A[g, :, col].copy()
        f[np.arange(len(g)), rb] = 0
        if p == 2:
            A[g] ^= f[:, :, None] * prow[:, None, :]
        else:
            A[g] = (A[g] - f[:, :, None] * prow[:, None, :]) % p
        r[g] += 1
        if (r >= k).all():
            break
    return A


def lexmin_index(flat: np.ndarray) -> int:
    """Index of the lexicographically least row of a 2-d array."""
    idx = np.arange(flat.shape[0])
    for c in range(flat.shape[1]):
        col = flat[idx, c]
        mn = col.min()
        idx = idx[col == mn]
        if len(idx) == 1:
            break
    return int(idx[0])


class MatrixGroup:
    def __init__(self, p: int, m: int, gens, cap: int = 2_000_000):
        self.p = p
        self.m = m
        dt = np.int16 if p > 2 else np.uint8
        self.gens = [np.asarray(g, dtype=dt) % p for g in gens]
        I = np.eye(m, dtype=dt)
        elems = [I]
        self.index = {I.tobytes(): 0}
        self.parent = [(-1, -1)]
        i = 0
        while i < len(elems):
            x = elems[i]
            for s, A in enumerate(self.gens):
                y = (x.astype(np.int64) @ A) % p
                y = y.astype(dt)
                key = y.tobytes()
                if key not in self.index:
                    if len(elems) >= cap:
                        raise CapExceeded(f"matrix group exceeds {cap} elements")
                    self.index[key] = len(elems)
                    elems.append(y)
                    self.parent.append((i, s))
            i += 1
        self.elements = np.stack(elems) if m else np.zeros((1, 0, 0), dtype=dt)
        self.dtype = dt

    def __len__(self) -> int:
        return len(self.elements)

    def word(self, i: int) -> list[int]:
        """Generator indices ``[s1, s2, ...]`` with element ``i = g_s1 g_s2 ...``."""
        out = []
        while i:
            i, s = self.parent[i]
            out.append(s)
        return out[::-1]

    def mul_index(self, i: int, j: int) -> int:
        y = (self.elements[i].astype(np.int64) @ self.elements[j]) % self.p
        return self.index[y.astype(self.dtype).tobytes()]

    # -------------------------------------------------------------- subspaces

    def images(self, basis: np.ndarray, idx=None, transpose: bool = False) -> np.ndarray:
        """Images of the rows of ``basis`` under the selected elements: ``(G, k, m)``."""
        E = self.elements if idx is None else self.elements[idx]
        b = np.asarray(basis, dtype=np.int64)
        if transpose:
            out = np.einsum("km,gjm->gkj", b, E.astype(np.int64))
        else:
            out = np.einsum("km,gmj->gkj", b, E.astype(np.int64))
        return (out % self.p).astype(self.dtype)

    def canonical(self, basis, transpose: bool = False, idx=None):
        """Lexicographically least RREF image of a subspace over the group."""
        b = np.asarray(basis)
        if b.shape[0] == 0:
            return b.astype(self.dtype)
        imgs = batched_rref(self.images(b, idx, transpose), self.p)
        flat = imgs.reshape(imgs.shape[0], -1)
        return imgs[lexmin_index(flat)]

    def stabilizer(self, basis, transpose: bool = False, idx=None) -> np.ndarray:
        """Indices of the elements fixing the subspace spanned by ``basis``."""
        b = np.asarray(basis)
        sel = np.arange(len(self)) if idx is None else np.asarray(idx)
        if b.shape[0] == 0:
            return sel
        own = batched_rref(b[None].astype(self.dtype), self.p)[0]
        imgs = batched_rref(self.images(b, sel, transpose), self.p)
        ok = (imgs == own[None]).all(axis=(1, 2))
        return sel[ok]

    def generating_subset(self, idx) -> list[int]:
        """A small subset of ``idx`` (a subgroup) that generates it."""
        target = set(int(i) for i in idx)
        chosen: list[int] = []
        closed = {0}
        for i in sorted(target):
            if i in closed:
                continue
            chosen.append(i)
            todo = list(closed)
            while todo:
                x = todo.pop()
                for g in chosen:
                    y = self.mul_index(x, g)
                    if y not in closed:
                        closed.add(y)
                        todo.append(y)
            if len(closed) == len(target):
                break
        return chosen


# ------------------------------------------------------------------ p = 2

def pack_rows(M: np.ndarray) -> np.ndarray:
    """Pack 0/1 rows into integers, coordinate 0 being the most significant bit."""
    M = np.asarray(M, dtype=np.int64)
    m = M.shape[-1]
    weights = np.left_shift(np.int64(1), np.arange(m - 1, -1, -1, dtype=np.int64))
    return (M * weights).sum(axis=-1)


def unpack(x: int, m: int) -> list[int]:
    return [(int(x) >> (m - 1 - j)) & 1 for j in range(m)]


def _highbit(a: np.ndarray) -> np.ndarray:
    """Highest set bit of each (positive) entry as a power of two, 0 for 0."""
    out = np.zeros_like(a)
    nz = a > 0
    e = np.frexp(a[nz].astype(np.float64))[1] - 1
    out[nz] = np.left_shift(np.int64(1), e.astype(np.int64))
    return out


def bit_rref(rows: np.ndarray) -> np.ndarray:
    """Canonical reduced echelon form of a batch ``(B, k)`` of packed GF(2) bases.

    Rows come out strictly decreasing with distinct leading bits, and no
    leading bit occurs in any other row.  Bases must have full rank.
    """
    R = rows.copy()
    B, k = R.shape
    ar = np.arange(B)
    for i in range(k):
        j = i + R[:, i:].argmax(axis=1)
        top = R[ar, j].copy()
        R[ar, j] = R[:, i]
        R[:, i] = top
        lead = _highbit(top)
        hit = (R & lead[:, None]) != 0
        hit[:, i] = False
        R ^= np.where(hit, top[:, None], 0)
    return R


class BitAction:
    """Action of a :class:`MatrixGroup` over GF(2) on packed vectors.

    ``dual=True`` uses ``f -> f A^T`` (the contragredient action up to
    inversion, which has the same orbits and stabilisers).

    For dimension at most ``orbit_dim_limit`` the orbits on vectors are
    precomputed; canonical forms and stabilisers of subspaces then only scan
    the group elements sending a distinguished vector of the subspace to its
    orbit representative, instead of the whole group.
    """

    NIBBLE = 4

    def __init__(self, group: MatrixGroup, dual: bool = False, orbit_dim_limit: int = 20):
        if group.p != 2 or group.m > 62:
            raise ValueError("bit action needs p = 2 and dimension at most 62")
        self.group = group
        self.m = m = group.m
        E = group.elements.astype(np.int64)
        self.dual = dual
        if dual:
            E = np.transpose(E, (0, 2, 1))
        # table[g, b] = image of basis vector e_b (bit m-1-b) under element g
        self.table = pack_rows(E)  # (G, m)
        # nibble tables: chunk c covers bits m-1-4c .. m-4-4c
        self.chunks = []
        for c in range(0, m, self.NIBBLE):
            bits = list(range(c, min(c + self.NIBBLE, m)))
            w = len(bits)
            shift = m - bits[-1] - 1
            T = np.zeros((len(E), 1 << w), dtype=np.int64)
            for x in range(1, 1 << w):
                for j, b in enumerate(bits):
                    if (x >> (w - 1 - j)) & 1:
                        T[:, x] ^= self.table[:, b]
            self.chunks.append((shift, (1 << w) - 1, T))
        self._labels = None
        self._inv = None
        self._per_label: dict = {}
        if m <= orbit_dim_limit:
            self._labels = self._vector_orbits()

    def image(self, vecs: np.ndarray, idx=None) -> np.ndarray:
        """Images ``(len(idx), len(vecs))`` of packed vectors."""
        vecs = np.asarray(vecs, dtype=np.int64)
        out = None
        for shift, mask, T in self.chunks:
            Ti = T if idx is None else T[idx]
            part = Ti[:, (vecs >> shift) & mask]
            out = part if out is None else out ^ part
        if out is None:
            n = len(self.group) if idx is None else len(idx)
            out = np.zeros((n, len(vecs)), dtype=np.int64)
        return out

    # ------------------------------------------------------------ helpers

    def _vector_orbits(self) -> np.ndarray:
        m = self.m
        allv = np.arange(1 << m, dtype=np.int64)
        perms = []
        for A in self.group.gens:
            A = A.astype(np.int64)
            T = pack_rows(A.T if self.dual else A)
            img = np.zeros_like(allv)
            for b in range(m):
                img ^= ((allv >> (m - 1 - b)) & 1) * T[b]
            perms.append(img)
        lab = allv.copy()
        while True:
            old = lab.copy()
            for img in perms:
                lab = np.minimum(lab, lab[img])
                np.minimum.at(lab, img, lab.copy())
            lab = lab[lab]
            if (lab == old).all():
                return lab

    def _inverses(self) -> np.ndarray:
        if self._inv is None:
            G = self.group
            m = self.m
            aug = np.concatenate([G.elements, np.broadcast_to(np.eye(m, dtype=G.dtype),
                                                               G.elements.shape)], axis=2)
            inv = batched_rref(aug.astype(G.dtype), 2)[:, :, m:].astype(G.dtype)
            self._inv = np.array([G.index[x.tobytes()] for x in inv], dtype=np.int64)
        return self._inv

    def _label_data(self, L: int):
        data = self._per_label.get(L)
        if data is None:
            y = self.image(np.array([L], dtype=np.int64))[:, 0]
            stab = np.nonzero(y == L)[0]
            trans = np.full(1 << self.m, -1, dtype=np.int64)
            trans[y] = self._inverses()
            data = (stab, trans)
            self._per_label[L] = data
        return data

    def _distinguished(self, basis: np.ndarray):
        vecs = np.zeros(1, dtype=np.int64)
        for r in basis:
            vecs = np.concatenate([vecs, vecs ^ int(r)])
        vecs = vecs[1:]
        labs = self._labels[vecs]
        best = None
        for L, cnt in zip(*np.unique(labs, return_counts=True)):
            stab, _ = self._label_data(int(L))
            cost = (int(cnt) * len(stab), int(L))
            if best is None or cost < best:
                best = cost
        L = best[1]
        stab, trans = self._label_data(L)
        return stab, trans[vecs[labs == L]]

    def _compose_index(self, first: int, second: int, third: int) -> int:
        E = self.group.elements.astype(np.int64)
        if self.dual:
            M = E[third] @ E[second] @ E[first]
        else:
            M = E[first] @ E[second] @ E[third]
        return self.group.index[(M % 2).astype(self.group.dtype).tobytes()]

    # ------------------------------------------------------------ subspaces

    def canonical(self, basis: np.ndarray, idx=None) -> np.ndarray:
        basis = np.asarray(basis, dtype=np.int64)
        if idx is None and self._labels is not None and len(basis):
            stab, hs = self._distinguished(basis)
            k = len(basis)
            moved = self.image(basis, hs).reshape(-1)
            imgs = self.image(moved, stab).reshape(-1, k)
            imgs = bit_rref(imgs)
        else:
            imgs = bit_rref(self.image(basis, idx))
        return imgs[lexmin_index(imgs)]

    def stabilizer(self, basis: np.ndarray, idx=None) -> np.ndarray:
        basis = np.asarray(basis, dtype=np.int64)
        if idx is None and self._labels is not None and len(basis):
            stab, hs = self._distinguished(basis)
            k = len(basis)
            targets = bit_rref(self.image(basis, hs))  # h_y S for y in D
            lookup: dict = {}
            for j, t in enumerate(targets):
                lookup.setdefault(t.tobytes(), []).append(j)
            h0 = int(hs[0])
            moved = bit_rref(self.image(self.image(basis, [h0])[0], stab))
            inv = self._inverses()
            out = []
            for si, row in enumerate(moved):
                for j in lookup.get(row.tobytes(), ()):
                    out.append(self._compose_index(h0, int(stab[si]), int(inv[hs[j]])))
            return np.array(sorted(out), dtype=np.int64)
        sel = np.arange(len(self.group)) if idx is None else np.asarray(idx)
        own = bit_rref(basis[None])[0]
        imgs = bit_rref(self.image(basis, sel))
        return sel[(imgs == own[None]).all(axis=1)]
