"""Consistent weighted power-commutator presentations of finite p-groups.

Elements are exponent vectors (tuples of ints in ``[0, p)``) over the
pc-generators ``a_0 .. a_{n-1}``; normal words are ``a_0^e0 a_1^e1 ...``.
Commutators follow ``[x, y] = x^-1 y^-1 x y``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

Element = tuple  # tuple[int, ...]
Word = Sequence[int]  # signed 1-based generator indices, as in collect()

# ("pow", i) : a_k = a_i^p ;  ("comm", j, i) : a_k = [a_j, a_i], j > i
Definition = Optional[tuple]

FORMAT_VERSION = 1

sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))


class PresentationError(ValueError):
    pass


def _sparse(vec: Sequence[int]) -> list[tuple[int, int]]:
    return [(k, e) for k, e in enumerate(vec) if e]


@dataclass(frozen=True, eq=False)
class PcPresentation:
    prime: int
    ngens: int
    weights: tuple
    definitions: tuple
    powers: tuple  # powers[i] = normal form of a_i^p
    commutators: tuple  # commutators[j][i] = normal form of [a_j, a_i], i < j
    dgens: int = field(default=-1)

    def __post_init__(self):
        n = self.ngens
        if self.dgens < 0:
            object.__setattr__(self, "dgens", sum(1 for w in self.weights if w == 1))
        if len(self.weights) != n or len(self.powers) != n or len(self.commutators) != n:
            raise PresentationError("relation tables do not match ngens")
        if len(self.definitions) != n:
            raise PresentationError("definitions do not match ngens")
        for i, v in enumerate(self.powers):
            if len(v) != n or any(v[k] for k in range(i + 1)):
                raise PresentationError(f"power relation {i} not supported above a_{i}")
        for j in range(n):
            if len(self.commutators[j]) != j:
                raise PresentationError("commutator table must be lower triangular")
            for i, v in enumerate(self.commutators[j]):
                if len(v) != n or any(v[k] for k in range(j + 1)):
                    raise PresentationError(f"commutator [{j},{i}] not supported above a_{j}")

    # ---------------------------------------------------------------- builders

    @classmethod
    def from_relations(cls, prime: int, ngens: int, weights=None, definitions=None,
                       powers=None, commutators=None) -> "PcPresentation":
        """Build from sparse relations.

        ``powers`` maps ``i -> {k: e}`` and ``commutators`` maps ``(j, i) -> {k: e}``;
        missing relations are trivial.
        """
        n = ngens
        zero = (0,) * n

        def dense(d):
            v = [0] * n
            for k, e in (d.items() if isinstance(d, dict) else d):
                v[k] = e % prime
            return tuple(v)

        pw = tuple(dense((powers or {}).get(i, {})) for i in range(n))
        cm = tuple(
            tuple(dense((commutators or {}).get((j, i), {})) if commutators else zero
                  for i in range(j))
            for j in range(n)
        )
        weights = tuple(weights) if weights is not None else (1,) * n
        definitions = tuple(definitions) if definitions is not None else (None,) * n
        return cls(prime, n, weights, definitions, pw, cm)

    @classmethod
    def elementary_abelian(cls, prime: int, d: int) -> "PcPresentation":
        return cls.from_relations(prime, d)

    # ---------------------------------------------------------------- tables

    @cached_property
    def _tables(self):
        n = self.ngens
        pw_words = [_sparse(v) for v in self.powers]
        # conj[i][j] for j > i: sparse word of a_j^{a_i} = a_j [a_j, a_i], or None if trivial
        noncomm: list[list[int]] = []
        conj: list[dict] = []
        for i in range(n):
            nc, cj = [], {}
            for j in range(i + 1, n):
                c = self.commutators[j][i]
                if any(c):
                    nc.append(j)
                    cj[j] = [(j, 1)] + _sparse(c)
            noncomm.append(nc)
            conj.append(cj)
        return pw_words, noncomm, conj

    # ---------------------------------------------------------------- collection

    def _mul_gen(self, e: list, i: int) -> None:
        """In place: e := e * a_i (collection from the left)."""
        p = self.prime
        pw_words, noncomm, conj = self._tables
        if e[i] == p - 1:
            start = i + 1
        else:
            start = -1
            for k in noncomm[i]:
                if e[k]:
                    start = k
                    break
            if start < 0:
                e[i] += 1
                return
        n = self.ngens
        saved = []
        for k in range(start, n):
            if e[k]:
                saved.append((k, e[k]))
                e[k] = 0
        if e[i] == p - 1:
            e[i] = 0
            for g, x in pw_words[i]:
                for _ in range(x):
                    self._mul_gen(e, g)
        else:
            e[i] += 1
        cj = conj[i]
        for k, x in saved:
            w = cj.get(k)
            if w is None:
                for _ in range(x):
                    self._mul_gen(e, k)
            else:
                for _ in range(x):
                    for g, y in w:
                        for _ in range(y):
                            self._mul_gen(e, g)

    def _mul_into(self, e: list, v: Sequence[int]) -> None:
        for k, x in enumerate(v):
            for _ in range(x):
                self._mul_gen(e, k)

    # ---------------------------------------------------------------- elements

    @property
    def identity(self) -> Element:
        return (0,) * self.ngens

    @property
    def order(self) -> int:
        return self.prime ** self.ngens

    def gen(self, i: int, e: int = 1) -> Element:
        v = [0] * self.ngens
        v[i] = e % self.prime
        return tuple(v)

    def check_element(self, g: Sequence[int]) -> None:
        if len(g) != self.ngens or any(not 0 <= x < self.prime for x in g):
            raise PresentationError(f"not an element of this presentation: {g!r}")

    def mul(self, g: Element, h: Element) -> Element:
        e = list(g)
        self._mul_into(e, h)
        return tuple(e)

    def inv(self, g: Element) -> Element:
        p = self.prime
        e = list(g)
        out = [0] * self.ngens
        acc: list[tuple[int, int]] = []
        for i in range(self.ngens):
            x = e[i]
            if x:
                for _ in range(p - x):
                    self._mul_gen(e, i)
                acc.append((i, p - x))
        # g * (a_i1^x1 a_i2^x2 ...) = 1, so g^-1 is that product
        for i, x in acc:
            for _ in range(x):
                self._mul_gen(out, i)
        return tuple(out)

    def pow(self, g: Element, k: int) -> Element:
        if k < 0:
            g, k = self.inv(g), -k
        result = self.identity
        base = g
        while k:
            if k & 1:
                result = self.mul(result, base)
            k >>= 1
            if k:
                base = self.mul(base, base)
        return result

    def comm(self, g: Element, h: Element) -> Element:
        """``[g, h] = g^-1 h^-1 g h``."""
        return self.mul(self.inv(self.mul(h, g)), self.mul(g, h))

    def conj(self, g: Element, h: Element) -> Element:
        """``g^h = h^-1 g h``."""
        return self.mul(self.inv(h), self.mul(g, h))

    def collect(self, word: Iterable[int]) -> Element:
        """Normal form of a word of signed 1-based generator indices."""
        e = [0] * self.ngens
        invs: dict[int, Element] = {}
        for s in word:
            i = abs(s) - 1
            if s == 0 or i >= self.ngens:
                raise PresentationError(f"generator index {s} out of range")
            if s > 0:
                self._mul_gen(e, i)
            else:
                if i not in invs:
                    invs[i] = self.inv(self.gen(i))
                self._mul_into(e, invs[i])
        return tuple(e)

    def is_identity(self, g: Element) -> bool:
        return not any(g)

    def element_order(self, g: Element) -> int:
        k = 1
        while any(g):
            g = self.pow(g, self.prime)
            k *= self.prime
        return k

    # ---------------------------------------------------------------- consistency

    def consistency_defects(self, upto: Optional[int] = None) -> Iterable[tuple[Element, Element]]:
        """Yield (lhs, rhs) for every standard test word; consistent iff all agree.

        ``upto`` restricts the tests to the first generators (the rest being
        central of order p, as for tails).
        """
        p = self.prime
        n = self.ngens if upto is None else upto
        mul = self.mul
        unit = [self.gen(i) for i in range(n)]
        top = [self.gen(i, p - 1) for i in range(n)]
        for k in range(n):
            for j in range(k):
                for i in range(j):
                    yield (mul(mul(unit[k], unit[j]), unit[i]),
                           mul(unit[k], mul(unit[j], unit[i])))
        for j in range(n):
            for i in range(j):
                yield (mul(mul(top[j], unit[j]), unit[i]),
                       mul(top[j], mul(unit[j], unit[i])))
                yield (mul(mul(unit[j], top[i]), unit[i]),
                       mul(unit[j], mul(top[i], unit[i])))
        for i in range(n):
            yield (mul(mul(unit[i], top[i]), unit[i]),
                   mul(unit[i], mul(top[i], unit[i])))

    def definitions_hold(self) -> bool:
        """Each defined generator is the last letter (exponent 1) of its defining relation."""
        for k, d in enumerate(self.definitions):
            if d is None:
                continue
            rhs = self.powers[d[1]] if d[0] == "pow" else self.commutators[d[1]][d[2]]
            support = [i for i, x in enumerate(rhs) if x]
            if not support or support[-1] != k or rhs[k] != 1:
                return False
        return True

    def is_consistent(self) -> bool:
        if not self.definitions_hold():
            return False
        return all(a == b for a, b in self.consistency_defects())

    # ---------------------------------------------------------------- misc

    def truncate(self, k: int) -> "PcPresentation":
        """Presentation of the quotient by the generators of weight > k."""
        keep = [i for i, w in enumerate(self.weights) if w <= k]
        if keep != list(range(len(keep))):
            raise PresentationError("generators are not sorted by weight")
        m = len(keep)
        return PcPresentation(
            self.prime, m, self.weights[:m], self.definitions[:m],
            tuple(v[:m] for v in self.powers[:m]),
            tuple(tuple(v[:m] for v in row) for row in self.commutators[:m]),
        )

    def __repr__(self) -> str:
        return f"<PcPresentation p={self.prime} order={self.prime}^{self.ngens} d={self.dgens}>"


def collect(pres: PcPresentation, word: Iterable[int]) -> Element:
    return pres.collect(word)


def consistency_check(pres: PcPresentation) -> bool:
    return pres.is_consistent()


# -------------------------------------------------------------------- serialization

def dumps(pres: PcPresentation) -> str:
    """Canonical versioned text record; ``loads(dumps(x))`` round-trips byte-exactly."""
    lines = [
        f"pcp {FORMAT_VERSION}",
        f"p {pres.prime}",
        f"ngens {pres.ngens}",
        "weights " + " ".join(str(w) for w in pres.weights),
    ]
    defs = []
    for d in pres.definitions:
        if d is None:
            defs.append("-")
        elif d[0] == "pow":
            defs.append(f"p{d[1]}")
        else:
            defs.append(f"c{d[1]},{d[2]}")
    lines.append("definitions " + " ".join(defs))

    def rel(v):
        return " ".join(f"{k}:{e}" for k, e in _sparse(v))

    lines.append("powers")
    for i, v in enumerate(pres.powers):
        if any(v):
            lines.append(f"  {i} = {rel(v)}")
    lines.append("commutators")
    for j in range(pres.ngens):
        for i, v in enumerate(pres.commutators[j]):
            if any(v):
                lines.append(f"  {j},{i} = {rel(v)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text: str) -> PcPresentation:
    lines = [ln.rstrip() for ln in text.splitlines()]
    if not lines or not lines[0].startswith("pcp "):
        raise PresentationError("missing pcp header")
    if int(lines[0].split()[1]) != FORMAT_VERSION:
        raise PresentationError(f"unsupported pcp version {lines[0].split()[1]}")
    kv = {}
    it = iter(lines[1:])
    powers: dict = {}
    comms: dict = {}
    section = None
    for ln in it:
        if ln == "end":
            break
        if ln in ("powers", "commutators"):
            section = ln
            continue
        if ln.startswith("  "):
            lhs, rhs = ln.strip().split(" = ")
            vec = {int(a): int(b) for a, b in (t.split(":") for t in rhs.split())}
            if section == "powers":
                powers[int(lhs)] = vec
            else:
                j, i = (int(t) for t in lhs.split(","))
                comms[(j, i)] = vec
            continue
        key, _, val = ln.partition(" ")
        kv[key] = val
    p, n = int(kv["p"]), int(kv["ngens"])
    weights = [int(w) for w in kv.get("weights", "").split()]
    defs = []
    for t in kv.get("definitions", "").split():
        if t == "-":
            defs.append(None)
        elif t[0] == "p":
            defs.append(("pow", int(t[1:])))
        else:
            j, i = t[1:].split(",")
            defs.append(("comm", int(j), int(i)))
    return PcPresentation.from_relations(p, n, weights, defs, powers, comms)
