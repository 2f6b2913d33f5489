"""Arithmetic pruning predicates for candidate quotients of a tower group.

Every filter is a pure function of a presentation (and a fixture) returning
a :class:`FilterVerdict`.  The fixture carries the number-theoretic truth
data: abelianizations of the subgroups of index 2 and 4, and of the maximal
subgroups of the "critical" index-4 classes (those whose abelianization is
unique in the index-4 profile).
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Optional, Sequence

from .abelian import (AbelianInvariants, canonical, format_invariants, invariants_from_orders,
                      is_quotient_of)
from .cover import CoveringData, p_covering_group
from .pcp import PcPresentation
from .subgroups import (SubgroupHandle, abelian_coordinates, closure, depth, derived_subgroup,
                        factor_coordinates, is_abelian, is_normal, low_index_lattice,
                        maximal_subgroups, power_subgroup_of, subgroup_abelianization, whole)

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"


class FixtureError(ValueError):
    pass


class AmbiguousCorrespondence(ValueError):
    """A fixture entry matches more than one subgroup class of the group."""


@dataclass
class FilterVerdict:
    name: str
    status: str
    witness: object = None

    def __post_init__(self):
        if self.status not in (PASS, FAIL, INDETERMINATE):
            raise ValueError(f"bad status {self.status!r}")
        if self.status == FAIL and self.witness is None:
            raise ValueError("a failing verdict needs a witness")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json(self) -> dict:
        return {"name": self.name, "status": self.status, "witness": _jsonable(self.witness)}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


# ------------------------------------------------------------------ fixture

def _profile_from_json(entries) -> Counter:
    out: Counter = Counter()
    for e in entries:
        out[canonical(e["ab"])] += int(e.get("count", 1))
    return out


def _profile_to_json(prof: Counter) -> list:
    return [{"ab": list(ab), "count": n} for ab, n in sorted(prof.items(), key=lambda t: (len(t[0]), t[0]))]


@dataclass
class CriticalEntry:
    ab: AbelianInvariants
    maximal_profile: Counter


@dataclass
class ArithmeticFixture:
    target_ab: AbelianInvariants
    index2: Counter
    index4: Counter
    critical: list
    lattice: Optional[list] = None
    capitulation: list = field(default_factory=list)
    name: str = ""
    prime: int = 2

    FORMAT = "pgtower-fixture"
    VERSION = 1

    @classmethod
    def loads(cls, text: str) -> "ArithmeticFixture":
        d = json.loads(text)
        if d.get("format", cls.FORMAT) != cls.FORMAT or d.get("version", 1) != cls.VERSION:
            raise FixtureError("unsupported fixture format or version")
        fx = cls(
            target_ab=canonical(d["target_ab"]),
            index2=_profile_from_json(d["index2"]),
            index4=_profile_from_json(d["index4"]),
            critical=[CriticalEntry(canonical(c["ab"]), _profile_from_json(c["maximal_profile"]))
                      for c in d.get("critical", [])],
            lattice=[(canonical(a), canonical(b)) for a, b in d["lattice"]] if d.get("lattice") else None,
            capitulation=list(d.get("capitulation") or []),
            name=d.get("name", ""),
            prime=d.get("prime", 2),
        )
        fx.validate()
        return fx

    @classmethod
    def load(cls, path) -> "ArithmeticFixture":
        with open(path) as fh:
            return cls.loads(fh.read())

    def dumps(self) -> str:
        d = {
            "format": self.FORMAT,
            "version": self.VERSION,
            "name": self.name,
            "prime": self.prime,
            "target_ab": list(self.target_ab),
            "index2": _profile_to_json(self.index2),
            "index4": _profile_to_json(self.index4),
            "critical": [{"ab": list(c.ab), "maximal_profile": _profile_to_json(c.maximal_profile)}
                         for c in self.critical],
            "lattice": [[list(a), list(b)] for a, b in self.lattice] if self.lattice else None,
            "capitulation": self.capitulation,
        }
        return json.dumps(d, indent=1, sort_keys=True) + "\n"

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def validate(self) -> None:
        p = self.prime
        d = len(self.target_ab)
        expect2 = (p ** d - 1) // (p - 1)
        if sum(self.index2.values()) != expect2:
            raise FixtureError(f"index-2 profile has {sum(self.index2.values())} entries, "
                               f"expected {expect2} for {d} generators")
        crit = self.critical_invariants()
        if self.critical and sorted(c.ab for c in self.critical) != sorted(crit):
            raise FixtureError("critical entries do not match the unique index-4 abelianizations")
        for c in self.critical:
            r = len(c.ab)
            if sum(c.maximal_profile.values()) != (p ** r - 1) // (p - 1):
                raise FixtureError(f"maximal profile of {format_invariants(c.ab)} has the wrong size")
        for entry in self.capitulation:
            if "subgroup_key" not in entry or "kernel_invariants" not in entry:
                raise FixtureError("capitulation entries need subgroup_key and kernel_invariants")

    def critical_invariants(self) -> list:
        return sorted(ab for ab, n in self.index4.items() if n == 1)


def default_fixture() -> ArithmeticFixture:
    text = resources.files("pgtower").joinpath("data/q5460.fixture").read_text()
    return ArithmeticFixture.loads(text)


def fixture_of(pres: PcPresentation, name: str = "") -> ArithmeticFixture:
    """The fixture a group would produce about itself (for self-consistency)."""
    lat = low_index_lattice(pres, pres.prime ** 2)
    idx2 = Counter(H.abelianization for H in lat.levels[0])
    idx4 = Counter(H.abelianization for H in lat.levels[1]) if len(lat.levels) > 1 else Counter()
    crit = []
    for ab in sorted(a for a, n in idx4.items() if n == 1):
        H = next(H for H in lat.levels[1] if H.abelianization == ab)
        crit.append(CriticalEntry(ab, maximal_profile(pres, H)))
    lattice = None
    if len(lat.incidence) > 0:
        lattice = sorted((lat.levels[0][i].abelianization, lat.levels[1][j].abelianization)
                         for i, j in lat.incidence[0])
    return ArithmeticFixture(_ab(pres), idx2, idx4, crit, lattice, [], name, pres.prime)


def _ab(pres: PcPresentation) -> AbelianInvariants:
    return whole(pres).abelianization


# ------------------------------------------------------------------ profiles

def abelianization_profile(pres: PcPresentation, index_level: int) -> Counter:
    """Multiset of abelianizations over conjugacy classes of subgroups of that index."""
    p = pres.prime
    k = 0
    while p ** k < index_level:
        k += 1
    if p ** k != index_level or k == 0:
        raise ValueError("index_level must be a positive power of p")
    lat = low_index_lattice(pres, index_level)
    if len(lat.levels) < k:
        return Counter()
    return Counter(H.abelianization for H in lat.levels[k - 1])


def maximal_profile(pres: PcPresentation, H: SubgroupHandle) -> Counter:
    """Abelianizations of all maximal subgroups of ``H``."""
    return Counter(M.abelianization for M in maximal_subgroups(pres, H))


def _matching(left: list, right: list, ok: Callable) -> list:
    """Maximum bipartite matching (Kuhn); returns ``match_right`` indices."""
    adj = [[j for j, b in enumerate(right) if ok(a, b)] for a in left]
    match_r = [-1] * len(right)

    def augment(i, seen):
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                if match_r[j] < 0 or augment(match_r[j], seen):
                    match_r[j] = i
                    return True
        return False

    unmatched = []
    for i in range(len(left)):
        if not augment(i, set()):
            unmatched.append(i)
    return unmatched


def _level_of(p: int, index: int) -> int:
    k, q = -1, 1
    while q < index:
        q *= p
        k += 1
    if q != index or k < 0:
        raise ValueError("index must be a positive power of p")
    return k


def compare_profiles(computed: Counter, expected: Counter, mode: str = "exact"):
    """``None`` when compatible, else a witness dict."""
    if mode not in ("exact", "quotient"):
        raise ValueError("mode must be 'exact' or 'quotient'")
    nc, ne = sum(computed.values()), sum(expected.values())
    if nc != ne:
        return {"reason": "entry count", "computed": nc, "expected": ne}
    if mode == "exact":
        for ab in sorted(set(computed) | set(expected), key=lambda a: (len(a), a)):
            if computed[ab] != expected[ab]:
                return {"reason": "multiplicity", "ab": format_invariants(ab),
                        "computed": computed[ab], "expected": expected[ab]}
        return None
    left = sorted(computed.elements(), key=lambda a: (len(a), a))
    right = sorted(expected.elements(), key=lambda a: (len(a), a))
    bad = _matching(left, right, is_quotient_of)
    if bad:
        return {"reason": "no quotient-compatible matching", "ab": format_invariants(left[bad[0]])}
    return None


# ------------------------------------------------------------------ filters

def abelianization_filter(pres: PcPresentation, target: Sequence[int]) -> FilterVerdict:
    ab = _ab(pres)
    target = canonical(target)
    if ab == target:
        return FilterVerdict("ab", PASS)
    return FilterVerdict("ab", FAIL, {"computed": format_invariants(ab),
                                      "expected": format_invariants(target)})


def relator_bound_filter(pres: PcPresentation, rmax: Optional[int] = None,
                         cover: Optional[CoveringData] = None) -> FilterVerdict:
    """Pass iff p-multiplicator rank minus nuclear rank is at most ``rmax``
    (default ``d + 1``)."""
    if rmax is None:
        rmax = pres.dgens + 1
    if rmax < 1:
        raise ValueError("rmax must be at least 1")
    cd = cover or p_covering_group(pres)
    w = {"multiplicator_rank": cd.multiplicator_rank, "nuclear_rank": cd.nuclear_rank, "rmax": rmax}
    status = PASS if cd.multiplicator_rank - cd.nuclear_rank <= rmax else FAIL
    return FilterVerdict("rank", status, w)


def golod_shafarevich_infinite(d: int, r: int) -> bool:
    """True when ``r <= d^2/4`` forces a pro-p group with these ranks to be infinite."""
    if d < 0 or r < 0:
        raise ValueError("ranks are non-negative")
    return d > 0 and 4 * r <= d * d


def profile_filter(pres: PcPresentation, fixture: ArithmeticFixture, mode: str = "exact",
                   levels: Sequence[int] = (2, 4)) -> FilterVerdict:
    name = "profile" + "".join(str(x) for x in levels)
    lat = low_index_lattice(pres, max(levels))
    levels = sorted(levels)
    for lev in levels:
        k = _level_of(pres.prime, lev)
        if k not in (0, 1):
            raise ValueError("fixture profiles cover index p and p^2 only")
        expected = fixture.index2 if k == 0 else fixture.index4
        computed = Counter(H.abelianization for H in lat.levels[k]) if k < len(lat.levels) else Counter()
        w = compare_profiles(computed, expected, mode)
        if w is not None:
            w["index"] = lev
            return FilterVerdict(name, FAIL, w)
    if mode == "exact" and fixture.lattice and pres.prime ** 2 in levels and len(lat.incidence) > 0:
        got = sorted((lat.levels[0][i].abelianization, lat.levels[1][j].abelianization)
                     for i, j in lat.incidence[0])
        if got != sorted(fixture.lattice):
            return FilterVerdict(name, FAIL, {"reason": "lattice incidence differs"})
    return FilterVerdict(name, PASS)


def critical_subgroups(pres: PcPresentation, fixture: ArithmeticFixture) -> list[SubgroupHandle]:
    """Index-4 classes whose abelianization is unique in the fixture profile.

    Raises :class:`AmbiguousCorrespondence` when such an abelianization is
    not unique (or absent) in ``pres``.
    """
    classes = low_index_lattice(pres, pres.prime ** 2).levels
    level = classes[1] if len(classes) > 1 else []
    out = []
    for ab in fixture.critical_invariants():
        hits = [H for H in level if H.abelianization == ab]
        if len(hits) != 1:
            raise AmbiguousCorrespondence(
                f"{format_invariants(ab)} occurs {len(hits)} times among index-{pres.prime ** 2} classes")
        out.append(hits[0])
    return out


def critical_filter(pres: PcPresentation, fixture: ArithmeticFixture,
                    mode: str = "quotient") -> FilterVerdict:
    try:
        subs = critical_subgroups(pres, fixture)
    except AmbiguousCorrespondence as exc:
        return FilterVerdict("critical", INDETERMINATE, str(exc))
    by_ab = {c.ab: c for c in fixture.critical}
    for H in subs:
        entry = by_ab.get(H.abelianization)
        if entry is None:
            continue
        w = compare_profiles(maximal_profile(pres, H), entry.maximal_profile, mode)
        if w is not None:
            w["critical"] = format_invariants(H.abelianization)
            return FilterVerdict("critical", FAIL, w)
    return FilterVerdict("critical", PASS)


# ------------------------------------------------------------------ transfer

@dataclass
class TransferData:
    source_invariants: AbelianInvariants
    target_invariants: AbelianInvariants
    matrix: list            # image coordinates of each canonical generator of G^ab
    kernel: list            # kernel elements as coordinate vectors over G^ab
    kernel_invariants: AbelianInvariants
    kernel_generators: list


class _AbelianChart:
    """Coordinates of ``H/[H,H]`` in its invariant basis."""

    def __init__(self, pres: PcPresentation, H: SubgroupHandle):
        self.pres, self.H = pres, H
        if H.cgs:
            self.D, self.fidx, diag, self.V, self.Vinv = abelian_coordinates(pres, H)
        else:
            self.D, self.fidx, diag, self.V, self.Vinv = H, [], [], [], []
        self.keep = [i for i, q in enumerate(diag) if q > 1]
        self.diag = [diag[i] for i in self.keep]

    @property
    def invariants(self) -> AbelianInvariants:
        return canonical(self.diag)

    def coords(self, h) -> list[int]:
        if not self.fidx:
            return []
        x = factor_coordinates(self.pres, self.H, self.D, self.fidx, h)
        y = [sum(x[r] * self.V[r][c] for r in range(len(x))) for c in range(len(x))]
        return [y[i] % q for i, q in zip(self.keep, self.diag)]

    def generator(self, i: int):
        """Element of ``H`` mapping to the ``i``-th invariant basis vector."""
        P = self.pres
        row = self.Vinv[self.keep[i]]
        g = P.identity
        for c, k in enumerate(self.fidx):
            if row[c]:
                g = P.mul(g, P.pow(self.H.cgs[k], row[c]))
        return g


def left_transversal(pres: PcPresentation, H: SubgroupHandle, cap: int = 1 << 16) -> list:
    """Exponent vectors vanishing at the depths of ``H``: one per left coset ``tH``."""
    hd = {depth(y) for y in H.cgs}
    free = [k for k in range(pres.ngens) if k not in hd]
    if pres.prime ** len(free) > cap:
        raise MemoryError("index exceeds the transversal cap")
    out = []
    for exps in itertools.product(range(pres.prime), repeat=len(free)):
        v = [0] * pres.ngens
        for k, e in zip(free, exps):
            v[k] = e
        out.append(tuple(v))
    return out


def coset_representative(pres: PcPresentation, H: SubgroupHandle, x):
    """The unique element of ``xH`` vanishing at the depths of ``H``."""
    P = pres
    for y in H.cgs:
        d = depth(y)
        if x[d]:
            x = P.mul(x, P.pow(y, -x[d]))
    return x


class _Transversal:
    """Left transversal of ``H``, optionally with randomised representatives."""

    def __init__(self, pres: PcPresentation, H: SubgroupHandle, seed: Optional[int], cap: int):
        P = self.pres = pres
        self.H = H
        self.canon = left_transversal(P, H, cap)
        self.rep = {t: t for t in self.canon}
        if seed is not None:
            import random
            rnd = random.Random(seed)
            for t in self.canon:
                h = P.identity
                for y in H.cgs:
                    h = P.mul(h, P.pow(y, rnd.randrange(P.prime)))
                self.rep[t] = P.mul(t, h)
        self.inv_rep = {t: P.inv(r) for t, r in self.rep.items()}

    def transfer(self, chart: "_AbelianChart", g) -> list[int]:
        P = self.pres
        acc = [0] * len(chart.diag)
        for t in self.canon:
            gt = P.mul(g, self.rep[t])
            t2 = coset_representative(P, self.H, gt)
            h = P.mul(self.inv_rep[t2], gt)
            for c, v in enumerate(chart.coords(h)):
                acc[c] += v
        return [a % q for a, q in zip(acc, chart.diag)]


def transfer_of_element(pres: PcPresentation, H: SubgroupHandle, g, seed: Optional[int] = None,
                        cap: int = 1 << 16) -> list[int]:
    """Coordinates in ``H^ab`` (see :func:`subgroup_coordinates`) of the transfer of ``g``."""
    return _Transversal(pres, H, seed, cap).transfer(_AbelianChart(pres, H), g)


def subgroup_coordinates(pres: PcPresentation, H: SubgroupHandle, h) -> list[int]:
    """Coordinates of ``h`` in ``H^ab`` with respect to its invariant basis."""
    return _AbelianChart(pres, H).coords(h)


def transfer_map(pres: PcPresentation, H: SubgroupHandle, seed: Optional[int] = None,
                 cap: int = 1 << 16) -> TransferData:
    """Transfer ``G^ab -> H^ab``; ``seed`` randomises the coset representatives."""
    P = pres
    src = _AbelianChart(P, whole(P))
    dst = _AbelianChart(P, H)
    tv = _Transversal(P, H, seed, cap)
    matrix = [tv.transfer(dst, src.generator(i)) for i in range(len(src.diag))]
    kernel = []
    size = 1
    for q in src.diag:
        size *= q
    if size > cap:
        raise MemoryError("source abelianization exceeds the enumeration cap")
    for y in itertools.product(*[range(q) for q in src.diag]):
        img = [sum(y[i] * matrix[i][c] for i in range(len(y))) % q for c, q in enumerate(dst.diag)]
        if not any(img):
            kernel.append(list(y))
    kinv = _invariants_of_elements(kernel, src.diag, P.prime)
    return TransferData(src.invariants, dst.invariants, matrix, kernel, kinv,
                        _generators_of(kernel, src.diag))


def _element_order_log(y, diag, p) -> int:
    k = 0
    while any(v * p ** k % q for v, q in zip(y, diag)):
        k += 1
    return k


def _invariants_of_elements(elems, diag, p) -> AbelianInvariants:
    if not elems:
        return ()
    logs = [_element_order_log(y, diag, p) for y in elems]
    counts = {k: sum(1 for x in logs if x <= k) for k in range(max(logs) + 1)}
    return invariants_from_orders(counts, p)


def _generators_of(elems, diag) -> list:
    span = {tuple([0] * len(diag))}
    gens = []
    for y in elems:
        if tuple(y) in span:
            continue
        gens.append(list(y))
        todo = list(span)
        while todo:
            x = todo.pop()
            for g in gens:
                z = tuple((a + b) % q for a, b, q in zip(x, g, diag))
                if z not in span:
                    span.add(z)
                    todo.append(z)
    return gens


# --------------------------------------------------------------- capitulation

def index2_fingerprint(lat, i: int) -> list:
    """Abelianizations of the index-p^2 classes below index-p class ``i``."""
    if not lat.incidence:
        return []
    return sorted(list(lat.levels[1][j].abelianization) for a, j in lat.incidence[0] if a == i)


def capitulation_filter(pres: PcPresentation, fixture: ArithmeticFixture) -> FilterVerdict:
    if not fixture.capitulation:
        return FilterVerdict("capitulation", INDETERMINATE, "fixture has no kernel data")
    lat = low_index_lattice(pres, pres.prime ** 2)
    for entry in fixture.capitulation:
        key = entry["subgroup_key"]
        ab = canonical(key["ab"])
        hits = [i for i, H in enumerate(lat.levels[0]) if H.abelianization == ab]
        if "contains" in key:
            want = sorted(list(canonical(x)) for x in key["contains"])
            hits = [i for i in hits if index2_fingerprint(lat, i) == want]
        if not hits:
            return FilterVerdict("capitulation", FAIL, {"reason": "no matching subgroup", "key": key})
        kernels = {transfer_map(pres, lat.levels[0][i]).kernel_invariants for i in hits}
        want_k = canonical(entry["kernel_invariants"])
        if len(hits) > 1 and len(kernels) > 1:
            return FilterVerdict("capitulation", INDETERMINATE,
                                 {"reason": "ambiguous correspondence", "key": key})
        if want_k not in kernels:
            return FilterVerdict("capitulation", FAIL,
                                 {"key": key, "computed": [format_invariants(k) for k in sorted(kernels)],
                                  "expected": format_invariants(want_k)})
    return FilterVerdict("capitulation", PASS)


# ----------------------------------------------------------- verbal tracking

class NotNormal(ValueError):
    pass


def verbal_subgroup(pres: PcPresentation, N: SubgroupHandle, functional: str) -> SubgroupHandle:
    """``V(N)`` for ``functional`` in ``power:n``, ``derived``, ``trivial``."""
    if functional == "trivial":
        return N
    if functional == "derived":
        return derived_subgroup(pres, N)
    if functional.startswith("power:"):
        return power_subgroup_of(pres, N, int(functional.split(":", 1)[1]))
    raise ValueError(f"unknown functional {functional!r}")


def lifted_subgroup(child: PcPresentation, N: SubgroupHandle) -> SubgroupHandle:
    """Full preimage in ``child`` of a subgroup of its class-c quotient."""
    n = N.pres.ngens
    pad = (0,) * (child.ngens - n)
    gens = [tuple(y) + pad for y in N.cgs] + [child.gen(k) for k in range(n, child.ngens)]
    return SubgroupHandle(child, closure(child, gens))


def verbal_index(pres: PcPresentation, N: SubgroupHandle, functional: str) -> int:
    return N.order // verbal_subgroup(pres, N, functional).order


def nover_criterion(parent: PcPresentation, child: PcPresentation,
                    selector: Callable[[PcPresentation], SubgroupHandle],
                    functional: str) -> bool:
    """Index-freeze test: ``[N : V(N)]`` agrees in parent and child.

    ``selector`` picks ``N`` in each group consistently; it must be normal.
    """
    idx = []
    for P in (parent, child):
        N = selector(P)
        if not is_normal(P, N):
            raise NotNormal("the freeze criterion is only available for normal subgroups")
        idx.append(verbal_index(P, N, functional))
    return idx[0] == idx[1]


def whole_group(P: PcPresentation) -> SubgroupHandle:
    return whole(P)


@dataclass
class PowerReport:
    n: int
    index: int
    index_log: int
    abelian: bool
    within_bound: bool
    invariants: Optional[AbelianInvariants]


def conjecture91_check(pres: PcPresentation, n: int = 8, bound_log: int = 40) -> PowerReport:
    """Index of ``G^n`` and whether it is abelian and within ``p^bound_log``."""
    H = power_subgroup_of(pres, whole(pres), n)
    idx_log = pres.ngens - len(H.cgs)
    ab = is_abelian(pres, H)
    inv = subgroup_abelianization(pres, H) if ab else None
    return PowerReport(n, pres.prime ** idx_log, idx_log, ab, idx_log <= bound_log, inv)


@dataclass
class StabilizationRow:
    klass: int
    ngens: int
    index_log: int
    abelian: bool
    frozen: bool            # index equals the previous class's index


def power_stabilization(fp, prime: int, n: int, start: int, max_class: int) -> list[StabilizationRow]:
    """Track ``[Q_c : Q_c^n]`` for the class-c quotients of ``fp``.

    Rows run from ``start`` until the index-freeze check first holds between
    consecutive classes (or ``max_class`` is reached, or the quotients stop
    growing).
    """
    from .cover import p_quotient

    if start < 2 or max_class < start:
        raise ValueError("need 2 <= start <= max_class")
    steps: list = []
    p_quotient(fp, prime, max_class, steps=steps)
    quotients = [s.presentation for s in steps]
    rows = []
    for c in range(start, len(quotients) + 1):
        Q, prev = quotients[c - 1], quotients[c - 2]
        H = power_subgroup_of(Q, whole(Q), n)
        frozen = nover_criterion(prev, Q, whole_group, f"power:{n}")
        rows.append(StabilizationRow(c, Q.ngens, Q.ngens - len(H.cgs), is_abelian(Q, H), frozen))
        if frozen:
            break
    return rows
