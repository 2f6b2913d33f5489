"""Breadth-first search of the descendant tree with a filter pipeline.

The search walks one p-class at a time.  Children of each frontier node are
streamed in their canonical order, filtered in chunks (optionally by a
process pool; results are merged in stream order so the outcome does not
depend on the worker count) and survivors form the next frontier.  The full
state is a JSON checkpoint written atomically; a run stopped by its budget
resumes exactly where it stopped.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .abelian import format_invariants, parse_invariants
from .cover import p_covering_group
from .descendants import (DEFAULT_MAX_NGENS, SizeCapExceeded, TerminalGroup, is_moribund,
                          iter_descendants, presentation_id, random_children)
from .filters import (FAIL, ArithmeticFixture, FilterVerdict, abelianization_filter,
                      abelianization_profile, capitulation_filter, critical_filter, profile_filter,
                      relator_bound_filter)
from .fp import FpPresentation
from .pcp import PcPresentation, dumps, loads
from .subgroups import is_abelian, p_class, power_subgroup_of, whole

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
OPEN, PRUNED, TERMINAL, MORIBUND, SURVIVOR = "open", "pruned", "terminal", "moribund", "survivor"


class CheckpointError(ValueError):
    pass


# ------------------------------------------------------------------ pipeline

FILTER_NAMES = ("ab", "rank", "profile2", "profile4", "critical", "capitulation")


def _parse_filter(spec: str):
    name, _, arg = spec.partition(":")
    if name not in FILTER_NAMES:
        raise ValueError(f"unknown filter {name!r}; choose from {', '.join(FILTER_NAMES)}")
    return name, arg


def make_filter(spec: str, fixture: Optional[ArithmeticFixture]):
    """Callable ``pres -> FilterVerdict`` for a spec such as ``rank:5`` or ``profile4:exact``.

    Verdicts are named by the spec string so statistics can be keyed on it.
    """
    f = _make_filter(spec, fixture)
    return lambda P: _renamed(f(P), spec)


def _make_filter(spec: str, fixture: Optional[ArithmeticFixture]):
    name, arg = _parse_filter(spec)
    if name == "ab":
        target = parse_invariants(arg) if arg else _need(fixture, spec).target_ab
        return lambda P: abelianization_filter(P, target)
    if name == "rank":
        rmax = int(arg) if arg else None
        return lambda P: relator_bound_filter(P, rmax)
    fx = _need(fixture, spec)
    if name == "profile2":
        mode = arg or "exact"
        return lambda P: profile_filter(P, fx, mode, (P.prime,))
    if name == "profile4":
        mode = arg or "quotient"
        return lambda P: profile_filter(P, fx, mode, (P.prime ** 2,))
    if name == "critical":
        mode = arg or "quotient"
        return lambda P: critical_filter(P, fx, mode)
    return lambda P: capitulation_filter(P, fx)


def _need(fixture, spec):
    if fixture is None:
        raise ValueError(f"filter {spec!r} needs a fixture")
    return fixture


def _renamed(v: FilterVerdict, name: str) -> FilterVerdict:
    v.name = name
    return v


def run_pipeline(pres: PcPresentation, pipeline: list) -> list[FilterVerdict]:
    """Apply filters in order, stopping at the first failure."""
    out = []
    for _, f in pipeline:
        v = f(pres)
        out.append(v)
        if v.status == FAIL:
            break
    return out


_WORKER_CACHE: dict = {}


def _evaluate_chunk(args):
    specs, fixture_text, texts = args
    key = (tuple(specs), fixture_text)
    if key not in _WORKER_CACHE:
        fx = ArithmeticFixture.loads(fixture_text) if fixture_text else None
        _WORKER_CACHE.clear()
        _WORKER_CACHE[key] = [(s, make_filter(s, fx)) for s in specs]
    pipeline = _WORKER_CACHE[key]
    return [[v.to_json() for v in run_pipeline(loads(t), pipeline)] for t in texts]


# ------------------------------------------------------------------- nodes

@dataclass
class SearchNode:
    group: PcPresentation
    path: list
    klass: int
    verdicts: list = field(default_factory=list)
    status: str = OPEN

    @property
    def node_id(self) -> str:
        return "/".join(self.path) or "root"

    def to_json(self) -> dict:
        return {"group": dumps(self.group), "path": list(self.path), "class": self.klass,
                "verdicts": self.verdicts, "status": self.status}

    @classmethod
    def from_json(cls, d: dict) -> "SearchNode":
        return cls(loads(d["group"]), list(d["path"]), d["class"], list(d["verdicts"]), d["status"])


def _class_stats(specs: list) -> dict:
    return {"enumerated": 0, "pruned": {s: 0 for s in specs}, "after": {s: 0 for s in specs},
            "surviving": 0, "terminal": 0, "oversize": 0}


# --------------------------------------------------------------- checkpoint

@dataclass
class Checkpoint:
    config: dict
    fixture_hash: Optional[str]
    klass: int                  # class of the frontier being expanded
    frontier: list              # SearchNode at class ``klass``
    next_frontier: list         # survivors found so far at class ``klass + 1``
    cursor_node: int = 0
    cursor_child: int = 0
    stats: dict = field(default_factory=dict)
    evaluated: int = 0
    done: bool = False
    version: int = CHECKPOINT_VERSION

    def payload(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "fixture_hash": self.fixture_hash,
            "class": self.klass,
            "frontier": [n.to_json() for n in self.frontier],
            "next_frontier": [n.to_json() for n in self.next_frontier],
            "cursor": [self.cursor_node, self.cursor_child],
            "stats": self.stats,
            "evaluated": self.evaluated,
            "done": self.done,
            "rng": {"seed": self.config.get("seed")},
        }

    def dumps(self) -> str:
        body = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"))
        digest = hashlib.sha256(body.encode()).hexdigest()
        return json.dumps({"checksum": digest, "state": json.loads(body)}, sort_keys=True, indent=1) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Checkpoint":
        try:
            outer = json.loads(text)
            state = outer["state"]
        except (ValueError, KeyError, TypeError) as exc:
            raise CheckpointError(f"unreadable checkpoint: {exc}") from None
        body = json.dumps(state, sort_keys=True, separators=(",", ":"))
        if hashlib.sha256(body.encode()).hexdigest() != outer.get("checksum"):
            raise CheckpointError("checkpoint checksum mismatch (corrupted file)")
        if state.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {state.get('version')}")
        return cls(
            config=state["config"],
            fixture_hash=state["fixture_hash"],
            klass=state["class"],
            frontier=[SearchNode.from_json(d) for d in state["frontier"]],
            next_frontier=[SearchNode.from_json(d) for d in state["next_frontier"]],
            cursor_node=state["cursor"][0],
            cursor_child=state["cursor"][1],
            stats=state["stats"],
            evaluated=state["evaluated"],
            done=state["done"],
        )

    def save(self, path: str) -> None:
        tmp = f"{path}.tmp{os.getpid()}"
        with open(tmp, "w") as fh:
            fh.write(self.dumps())
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        with open(path) as fh:
            return cls.loads(fh.read())


def checkpoint_roundtrip(path: str) -> Checkpoint:
    return Checkpoint.load(path)


# ------------------------------------------------------------------- search

@dataclass
class SearchResult:
    status: str                 # "complete" or "budget"
    stats: dict
    survivors: list             # SearchNode at the final class
    evaluated: int
    checkpoint: Optional[Checkpoint] = None

    def counts(self, klass: int) -> dict:
        return self.stats[str(klass)]


def _root_presentation(root, p: int, root_class: int) -> PcPresentation:
    if isinstance(root, FpPresentation):
        from .cover import p_quotient
        return p_quotient(root, p, root_class)
    return root


def _derived_seed(seed: int, node_id: str) -> int:
    h = hashlib.sha256(f"{seed}|{node_id}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def _children(node: SearchNode, cfg: dict):
    """Yield ``(certificate, presentation)`` for the children of ``node``."""
    if cfg["mode"] == "exhaustive":
        for ch in iter_descendants(node.group, max_step=cfg.get("max_step")):
            yield ch.certificate, ch.presentation
        return
    try:
        kids = random_children(node.group, cfg["samples"], _derived_seed(cfg["seed"], node.node_id))
    except TerminalGroup:
        return
    seen = set()
    for i, P in enumerate(kids):
        pid = presentation_id(P)
        if pid not in seen:
            seen.add(pid)
            yield f"r{i}:{pid}", P


def search(root, pipeline_specs: list, max_class: int, *,
           fixture: Optional[ArithmeticFixture] = None,
           budget: Optional[int] = None,
           checkpoint_path: Optional[str] = None,
           resume: bool = False,
           workers: int = 1,
           mode: str = "exhaustive",
           samples: int = 16,
           seed: int = 0,
           chunk: int = 256,
           max_ngens: int = DEFAULT_MAX_NGENS,
           max_step: Optional[int] = None,
           prime: int = 2,
           root_class: int = 1) -> SearchResult:
    """Breadth-first filtered descendant search up to ``max_class``.

    ``budget`` caps the number of children evaluated in this call; when it
    runs out the state is checkpointed (if a path is given) and the result
    has status ``"budget"``.  With ``resume`` the run continues from the
    checkpoint at ``checkpoint_path``.
    """
    if mode not in ("exhaustive", "sampled"):
        raise ValueError("mode must be 'exhaustive' or 'sampled'")
    for s in pipeline_specs:
        _parse_filter(s)
    fixture_text = fixture.dumps() if fixture is not None else None
    fixture_hash = fixture.hash if fixture is not None else None
    if resume:
        if not checkpoint_path:
            raise ValueError("resume needs a checkpoint path")
        ck = Checkpoint.load(checkpoint_path)
        if ck.fixture_hash != fixture_hash:
            raise CheckpointError("fixture hash differs from the one the checkpoint was written with")
        if ck.config["pipeline"] != list(pipeline_specs) or ck.config["max_class"] != max_class:
            raise CheckpointError("pipeline or max_class differs from the checkpointed run")
        cfg = ck.config
    else:
        P = _root_presentation(root, prime, root_class)
        c0 = p_class(P)
        cfg = {"pipeline": list(pipeline_specs), "max_class": max_class, "mode": mode,
               "samples": samples, "seed": seed, "max_ngens": max_ngens, "max_step": max_step,
               "root": presentation_id(P), "root_class": c0}
        ck = Checkpoint(cfg, fixture_hash, c0, [SearchNode(P, [], c0, [], SURVIVOR)], [],
                        stats={}, done=c0 >= max_class)
    pipeline = [(s, make_filter(s, fixture)) for s in cfg["pipeline"]]
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    spent = 0
    try:
        while not ck.done:
            child_class = ck.klass + 1
            st = ck.stats.setdefault(str(child_class), _class_stats(cfg["pipeline"]))
            while ck.cursor_node < len(ck.frontier):
                node = ck.frontier[ck.cursor_node]
                if node.group.ngens > cfg["max_ngens"]:
                    st["oversize"] += 1
                    ck.cursor_node, ck.cursor_child = ck.cursor_node + 1, 0
                    continue
                stream = _children(node, cfg)
                skipped = 0
                produced = ck.cursor_child
                while skipped < ck.cursor_child and next(stream, None) is not None:
                    skipped += 1
                exhausted = False
                while not exhausted:
                    room = chunk if budget is None else min(chunk, budget - spent)
                    if room <= 0:
                        if checkpoint_path:
                            ck.save(checkpoint_path)
                        return SearchResult("budget", ck.stats, [], ck.evaluated, ck)
                    batch = []
                    for item in stream:
                        batch.append(item)
                        if len(batch) >= room:
                            break
                    if len(batch) < room:
                        exhausted = True
                    if not batch:
                        break
                    verdicts = _evaluate(batch, pipeline, cfg["pipeline"], fixture_text, pool, workers)
                    for (cert, P), vs in zip(batch, verdicts):
                        _record(st, vs)
                        if not vs or vs[-1]["status"] != FAIL:
                            ck.next_frontier.append(
                                SearchNode(P, node.path + [cert], child_class, vs, SURVIVOR))
                    produced += len(batch)
                    ck.cursor_child = produced
                    ck.evaluated += len(batch)
                    spent += len(batch)
                    if checkpoint_path:
                        ck.save(checkpoint_path)
                if produced == 0:
                    st["terminal"] += 1
                    node.status = TERMINAL
                ck.cursor_node, ck.cursor_child = ck.cursor_node + 1, 0
                if checkpoint_path:
                    ck.save(checkpoint_path)
            ck.next_frontier.sort(key=lambda n: n.path)
            st["surviving"] = len(ck.next_frontier)
            log.info("class %d: %s", child_class, st)
            ck.klass, ck.frontier, ck.next_frontier = child_class, ck.next_frontier, []
            ck.cursor_node = ck.cursor_child = 0
            if child_class >= cfg["max_class"] or not ck.frontier:
                ck.done = True
            if checkpoint_path:
                ck.save(checkpoint_path)
    finally:
        if pool is not None:
            pool.shutdown()
    return SearchResult("complete", ck.stats, ck.frontier, ck.evaluated, ck)


def _evaluate(batch, pipeline, specs, fixture_text, pool, workers) -> list:
    if pool is None:
        return [[v.to_json() for v in run_pipeline(P, pipeline)] for _, P in batch]
    texts = [dumps(P) for _, P in batch]
    size = max(1, -(-len(texts) // workers))
    parts = [(specs, fixture_text, texts[i:i + size]) for i in range(0, len(texts), size)]
    out = []
    for res in pool.map(_evaluate_chunk, parts):
        out.extend(res)
    return out


def _record(st: dict, verdicts: list) -> None:
    st["enumerated"] += 1
    for v in verdicts:
        if v["status"] == FAIL:
            st["pruned"][v["name"]] = st["pruned"].get(v["name"], 0) + 1
            return
        st["after"][v["name"]] = st["after"].get(v["name"], 0) + 1


def survivor_certificates(result: SearchResult) -> list[str]:
    return sorted("/".join(n.path) for n in result.survivors)


# ------------------------------------------------------------------- report

def report(pres: PcPresentation, *, profiles: bool = True, moribund_depth: int = 1,
           max_ngens: int = DEFAULT_MAX_NGENS) -> dict:
    """Structured summary of a group."""
    P = pres
    cd = p_covering_group(P)
    out = {
        "prime": P.prime,
        "order_log": P.ngens,
        "order": f"{P.prime}^{P.ngens}",
        "d": P.dgens,
        "p_class": p_class(P),
        "abelianization": list(whole(P).abelianization),
        "multiplicator_rank": cd.multiplicator_rank,
        "nuclear_rank": cd.nuclear_rank,
        "terminal": cd.nuclear_rank == 0,
        "id": presentation_id(P),
    }
    if profiles:
        for idx in (P.prime, P.prime ** 2):
            prof = abelianization_profile(P, idx)
            out[f"index{idx}_profile"] = [{"ab": list(ab), "count": n}
                                         for ab, n in sorted(prof.items(), key=lambda t: (len(t[0]), t[0]))]
    powers = {}
    for n in (2, 4, 8):
        H = power_subgroup_of(P, whole(P), n)
        powers[str(n)] = {"index_log": P.ngens - len(H.cgs), "abelian": is_abelian(P, H)}
    out["power_subgroups"] = powers
    try:
        mv = is_moribund(P, moribund_depth, max_ngens)
        out["moribund"] = {"verdict": mv.verdict, "depth": mv.depth, "max_depth": moribund_depth}
    except SizeCapExceeded as exc:
        out["moribund"] = {"verdict": "unknown", "depth": None, "max_depth": moribund_depth,
                           "note": str(exc)}
    return out


def format_report(rep: dict) -> str:
    lines = [
        f"order            {rep['order']}",
        f"generators d     {rep['d']}",
        f"p-class          {rep['p_class']}",
        f"abelianization   {format_invariants(rep['abelianization'])}",
        f"multiplicator    rank {rep['multiplicator_rank']}",
        f"nucleus          rank {rep['nuclear_rank']}{'  (terminal)' if rep['terminal'] else ''}",
    ]
    for key in sorted(k for k in rep if k.endswith("_profile")):
        items = ", ".join(f"{format_invariants(e['ab'])} x{e['count']}" for e in rep[key])
        lines.append(f"{key:<16} {items}")
    for n, v in rep["power_subgroups"].items():
        lines.append(f"G^{n:<14} index {rep['prime']}^{v['index_log']}, "
                     f"{'abelian' if v['abelian'] else 'non-abelian'}")
    m = rep["moribund"]
    lines.append(f"moribund         {m['verdict']}" + (f" at depth {m['depth']}" if m["depth"] is not None else ""))
    return "\n".join(lines)


def format_stats(stats: dict, specs: list) -> str:
    lines = []
    for c in sorted(stats, key=int):
        st = stats[c]
        parts = [f"class {c}: enumerated {st['enumerated']}"]
        for s in specs:
            parts.append(f"after {s} {st['after'].get(s, 0)}")
        parts.append(f"surviving {st['surviving']}")
        if st.get("terminal"):
            parts.append(f"terminal parents {st['terminal']}")
        lines.append(", ".join(parts))
    return "\n".join(lines)
