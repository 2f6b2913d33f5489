"""Finitely presented pro-p groups: relator words with left-normed commutators.

Syntax: generators ``a..z``; a relator is a product of factors, a factor is a
generator or a parenthesised group, optionally raised to ``^k`` (``k`` may be
negative).  ``(x,y,z)`` is the left-normed commutator ``((x,y),z)``; a
parenthesised single word is plain grouping.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Callable

# word  := list of factors
# factor:= ("g", index, exp) | ("c", [word, ...], exp) | ("w", word, exp)


class FpSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class FpPresentation:
    ngens: int
    relators: tuple
    names: str = string.ascii_lowercase
    source: str = ""

    @classmethod
    def parse(cls, text: str) -> "FpPresentation":
        text = "".join(text.split())
        if text.startswith("<") and text.endswith(">"):
            text = text[1:-1]
        if "|" in text:
            gens, _, rels = text.partition("|")
            names = gens.replace(",", "")
        else:
            names, rels = None, text
        relators = _split_top(rels) if rels else []
        parsed = [_Parser(r).word_all() for r in relators]
        used = set()
        for w in parsed:
            _letters(w, used)
        if names is None:
            ngens = max((string.ascii_lowercase.index(c) for c in used), default=-1) + 1
            names = string.ascii_lowercase[:ngens]
        for c in used:
            if c not in names:
                raise FpSyntaxError(f"relator uses undeclared generator {c!r}")
        idx = {c: k for k, c in enumerate(names)}
        return cls(len(names), tuple(_index(w, idx) for w in parsed), names, text)

    def evaluate(self, relator, images: list, mul: Callable, inv: Callable,
                 identity) -> object:
        """Evaluate a parsed relator in any group given callables."""

        def power(x, k):
            if k < 0:
                x, k = inv(x), -k
            out = identity
            for _ in range(k):
                out = mul(out, x)
            return out

        def comm(x, y):
            return mul(inv(mul(y, x)), mul(x, y))

        def word(w):
            out = identity
            for f in w:
                out = mul(out, factor(f))
            return out

        def factor(f):
            kind, body, e = f
            if kind == "g":
                v = images[body]
            elif kind == "w":
                v = word(body)
            else:
                v = word(body[0])
                for part in body[1:]:
                    v = comm(v, word(part))
            return power(v, e)

        return word(relator)

    def exponent_sums(self, relator) -> list[int]:
        sums = [0] * self.ngens

        def word(w, mult):
            for kind, body, e in w:
                if kind == "g":
                    sums[body] += mult * e
                elif kind == "w":
                    word(body, mult * e)
                # commutators have zero exponent sum

        word(relator, 1)
        return sums


def _split_top(s: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise FpSyntaxError("unbalanced parentheses")
    out.append("".join(cur))
    return [r for r in out if r]


class _Parser:
    def __init__(self, s: str):
        self.s = s
        self.i = 0

    def peek(self):
        return self.s[self.i] if self.i < len(self.s) else ""

    def word_all(self):
        w = self.word()
        if self.i != len(self.s):
            raise FpSyntaxError(f"unexpected {self.peek()!r} in {self.s!r}")
        return w

    def word(self):
        out = []
        while self.peek() and self.peek() not in ",)":
            out.append(self.factor())
        return out

    def factor(self):
        ch = self.peek()
        if ch == "(":
            self.i += 1
            parts = [self.word()]
            while self.peek() == ",":
                self.i += 1
                parts.append(self.word())
            if self.peek() != ")":
                raise FpSyntaxError(f"missing ')' in {self.s!r}")
            self.i += 1
            atom = ("w", parts[0]) if len(parts) == 1 else ("c", parts)
        elif ch.isalpha():
            self.i += 1
            atom = ("g", ch)
        else:
            raise FpSyntaxError(f"unexpected {ch!r} in {self.s!r}")
        e = 1
        if self.peek() == "^":
            self.i += 1
            j = self.i
            if self.peek() in "+-":
                self.i += 1
            while self.peek().isdigit():
                self.i += 1
            try:
                e = int(self.s[j:self.i])
            except ValueError:
                raise FpSyntaxError(f"bad exponent in {self.s!r}") from None
        return (*atom, e)


def _letters(w, acc):
    for kind, body, _ in w:
        if kind == "g":
            acc.add(body)
        elif kind == "w":
            _letters(body, acc)
        else:
            for part in body:
                _letters(part, acc)


def _index(w, idx):
    out = []
    for kind, body, e in w:
        if kind == "g":
            out.append(("g", idx[body], e))
        elif kind == "w":
            out.append(("w", _index(body, idx), e))
        else:
            out.append(("c", [_index(part, idx) for part in body], e))
    return out


BUILTIN_TEXT = {
    "koch-q2": "<a,b,c,d | a^-2(d,c), b^-2(d,a)((d,b),b), c^-2(b,a)((d,b),b), "
               "d^-2(c,a)(d,a)(d,b), (b,c)>",
    "conj72-1": "<a,b,c,d | a^-2(d,c), b^-2(d,a)((d,b),b), c^-2(b,a)((d,b),b), "
                "d^-2(c,a)(d,a)(d,b)(b,a,a)(c,a,a)(d,a,a), (b,c)>",
    "conj72-2": "<a,b,c,d | a^-2(d,c), b^-2(d,a)((d,b),b), c^-2(b,a)(b,a,d)(c,a,a)((d,b),b), "
                "d^-2(c,a)(d,a)(d,b)(b,a,a)(b,a,d), (b,c)>",
    "ex93": "<a,b,c,d | a^-2(d,c), b^-2(d,a)(d,b,b)(b,a,a,c), "
            "c^-2(b,a)(d,b,b)(b,a,a,c), d^-2(c,a)(d,a)(d,b), (b,c)>",
}


def builtin(name: str) -> FpPresentation:
    try:
        return FpPresentation.parse(BUILTIN_TEXT[name])
    except KeyError:
        raise KeyError(f"unknown built-in presentation {name!r}; "
                       f"choose from {sorted(BUILTIN_TEXT)}") from None
