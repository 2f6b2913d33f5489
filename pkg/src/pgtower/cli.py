"""Command-line interface.

Exit codes: 0 pass / success, 1 fail (no survivors, not moribund, bound
violated), 2 usage error, 3 budget or size cap exhausted.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys

from .abelian import format_invariants
from .cover import p_covering_group, p_quotient
from .descendants import SizeCapExceeded, immediate_descendants, is_moribund
from .explorer import (CheckpointError, format_report, format_stats, report, search,
                       survivor_certificates)
from .filters import ArithmeticFixture, conjecture91_check, default_fixture, power_stabilization
from .fp import BUILTIN_TEXT, FpPresentation, builtin
from .pcp import PcPresentation, dumps, loads
from .subgroups import whole

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

DEFAULT_CLASS = {"koch-q2": 2, "conj72-1": 3, "conj72-2": 3, "ex93": 4}


def _load_fp(spec: str) -> FpPresentation:
    if spec in BUILTIN_TEXT:
        return builtin(spec)
    if os.path.exists(spec):
        with open(spec) as fh:
            return FpPresentation.parse(fh.read())
    return FpPresentation.parse(spec)


def load_group(spec: str, prime: int = 2, klass: int | None = None) -> PcPresentation:
    """A pc presentation from a file, a built-in name, or ``ea<p>^<d>``.

    Files may hold a pc record or a finitely presented group (then its
    class-``klass`` p-quotient is taken).
    """
    m = re.fullmatch(r"ea(\d+)\^(\d+)", spec)
    if m:
        return PcPresentation.elementary_abelian(int(m.group(1)), int(m.group(2)))
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        if text.startswith("pcp "):
            return loads(text)
        return p_quotient(FpPresentation.parse(text), prime, klass or 1)
    if spec in BUILTIN_TEXT:
        return p_quotient(builtin(spec), prime, klass or DEFAULT_CLASS[spec])
    raise argparse.ArgumentTypeError(f"cannot read group {spec!r}")


def split_filters(text: str | None) -> list[str]:
    """Split ``ab:2,2,2,2,rank:5`` on the commas that start a new filter name."""
    return [f for f in re.split(r",(?=[a-z])", text or "") if f]


def _load_fixture(spec: str | None) -> ArithmeticFixture | None:
    if spec is None:
        return None
    if spec in ("default", "q5460", "q5460.fixture") and not os.path.exists(spec):
        return default_fixture()
    return ArithmeticFixture.load(spec)


def _emit(obj, as_json: bool, text: str) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True) if as_json else text)


def cmd_pquotient(a) -> int:
    Q = p_quotient(_load_fp(a.group), a.prime, a.klass)
    cd = p_covering_group(Q)
    ab = whole(Q).abelianization
    info = {"order": f"{Q.prime}^{Q.ngens}", "order_log": Q.ngens, "abelianization": list(ab),
            "multiplicator_rank": cd.multiplicator_rank, "nuclear_rank": cd.nuclear_rank}
    if a.out:
        with open(a.out, "w") as fh:
            fh.write(dumps(Q))
    _emit(info, a.json, "\n".join([
        f"order           {info['order']}",
        f"abelianization  {format_invariants(ab)}",
        f"multiplicator   rank {cd.multiplicator_rank}",
        f"nucleus         rank {cd.nuclear_rank}",
    ]))
    return EXIT_PASS


def cmd_children(a) -> int:
    G = load_group(a.group, a.prime, a.klass)
    batch = immediate_descendants(G, max_step=a.max_step)
    by_step: dict = {}
    for ch in batch:
        by_step[ch.step] = by_step.get(ch.step, 0) + 1
    if a.out_dir:
        os.makedirs(a.out_dir, exist_ok=True)
        for i, ch in enumerate(batch):
            with open(os.path.join(a.out_dir, f"child{i:06d}.pcp"), "w") as fh:
                fh.write(dumps(ch.presentation))
    info = {"count": len(batch), "by_step": by_step, "multiplicator_rank": batch.multiplicator_rank,
            "nuclear_rank": batch.nuclear_rank, "certificates": batch.dedup_certificates}
    lines = [f"children {len(batch)}"] + [f"  step {k}: {v}" for k, v in sorted(by_step.items())]
    if a.verbose:
        lines += batch.dedup_certificates
    _emit(info, a.json, "\n".join(lines))
    return EXIT_PASS


def cmd_report(a) -> int:
    G = load_group(a.group, a.prime, a.klass)
    rep = report(G, profiles=not a.no_profiles, moribund_depth=a.moribund_depth)
    _emit(rep, a.json, format_report(rep))
    return EXIT_PASS


def cmd_search(a) -> int:
    fixture = _load_fixture(a.fixture)
    filters = split_filters(a.filters)
    root = None if a.resume else load_group(a.root, a.prime, a.root_class)
    try:
        res = search(root, filters, a.max_class, fixture=fixture, budget=a.budget,
                     checkpoint_path=a.checkpoint, resume=a.resume, workers=a.workers,
                     mode=a.mode, samples=a.samples, seed=a.seed, max_step=a.max_step,
                     prime=a.prime)
    except CheckpointError as exc:
        print(f"checkpoint error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if a.out_dir and res.status == "complete":
        os.makedirs(a.out_dir, exist_ok=True)
        for i, n in enumerate(res.survivors):
            with open(os.path.join(a.out_dir, f"survivor{i:06d}.pcp"), "w") as fh:
                fh.write(dumps(n.group))
    info = {"status": res.status, "stats": res.stats, "evaluated": res.evaluated,
            "survivors": survivor_certificates(res) if res.status == "complete" else []}
    text = format_stats(res.stats, filters) + f"\nstatus {res.status}"
    _emit(info, a.json, text)
    if res.status == "budget":
        return EXIT_BUDGET
    return EXIT_PASS if res.survivors else EXIT_FAIL


def cmd_moribund(a) -> int:
    G = load_group(a.group, a.prime, a.klass)
    try:
        v = is_moribund(G, a.depth, a.max_ngens)
    except SizeCapExceeded as exc:
        _emit({"verdict": "capped", "note": str(exc)}, a.json, f"size cap reached: {exc}")
        return EXIT_BUDGET
    info = {"verdict": v.verdict, "depth": v.depth, "orders": v.orders}
    _emit(info, a.json, f"{v.verdict}" + (f" (nuclear rank 0 at depth {v.depth})" if v.depth is not None else ""))
    return EXIT_PASS if v.verdict == "moribund" else EXIT_FAIL


def cmd_conj91(a) -> int:
    G = load_group(a.group, a.prime, a.klass)
    r = conjecture91_check(G, a.n, a.bound)
    info = {"n": r.n, "index_log": r.index_log, "abelian": r.abelian, "within_bound": r.within_bound,
            "invariants": list(r.invariants) if r.invariants is not None else None}
    text = (f"G^{r.n}: index {G.prime}^{r.index_log}, {'abelian' if r.abelian else 'non-abelian'}, "
            f"{'within' if r.within_bound else 'beyond'} {G.prime}^{a.bound}")
    if r.invariants is not None:
        text += f"\ninvariants {format_invariants(r.invariants)} (rank {len(r.invariants)})"
    _emit(info, a.json, text)
    return EXIT_PASS if r.abelian and r.within_bound else EXIT_FAIL


def cmd_powers(a) -> int:
    rows = power_stabilization(_load_fp(a.group), a.prime, a.n, a.start, a.max_class)
    info = [{"class": r.klass, "order_log": r.ngens, "index_log": r.index_log, "abelian": r.abelian,
             "frozen": r.frozen} for r in rows]
    text = "\n".join(f"class {r.klass}: |G| = {a.prime}^{r.ngens}, [G : G^{a.n}] = {a.prime}^{r.index_log}, "
                     f"{'abelian' if r.abelian else 'non-abelian'}{', frozen' if r.frozen else ''}"
                     for r in rows)
    _emit(info, a.json, text)
    return EXIT_PASS if rows and rows[-1].frozen else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pgtower", description=__doc__.splitlines()[0])
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    def group_args(sp, name="group"):
        sp.add_argument(name, help="pc file, fp file, built-in name or ea<p>^<d>")
        sp.add_argument("-p", "--prime", type=int, default=2)
        sp.add_argument("-c", "--class", dest="klass", type=int, default=None,
                        help="p-class of the quotient taken from fp input")
        sp.add_argument("--json", action="store_true")

    sp = sub.add_parser("pquotient", help="p-quotient of a finitely presented group")
    group_args(sp)
    sp.add_argument("-o", "--out", help="write the pc presentation here")
    sp.set_defaults(func=cmd_pquotient, klass=None)

    sp = sub.add_parser("children", help="immediate descendants up to isomorphism")
    group_args(sp)
    sp.add_argument("--max-step", type=int, default=None)
    sp.add_argument("--out-dir")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_children)

    sp = sub.add_parser("report", help="structured summary of a group")
    group_args(sp)
    sp.add_argument("--no-profiles", action="store_true")
    sp.add_argument("--moribund-depth", type=int, default=1)
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("search", help="filtered breadth-first descendant search")
    sp.add_argument("root", nargs="?", default=None)
    sp.add_argument("-p", "--prime", type=int, default=2)
    sp.add_argument("--root-class", type=int, default=None)
    sp.add_argument("--fixture", default=None, help="fixture file or 'default'")
    sp.add_argument("--filters", default="", help="comma list: ab,rank[:r],profile2,profile4,critical,capitulation")
    sp.add_argument("--max-class", type=int, required=True)
    sp.add_argument("--budget", type=int, default=None, help="children evaluated in this run")
    sp.add_argument("--checkpoint")
    sp.add_argument("--resume", action="store_true")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    sp.add_argument("--samples", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-step", type=int, default=None)
    sp.add_argument("--out-dir")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("moribund", help="iterated covering-group moribund test")
    group_args(sp)
    sp.add_argument("--depth", type=int, default=2)
    sp.add_argument("--max-ngens", type=int, default=96)
    sp.set_defaults(func=cmd_moribund)

    sp = sub.add_parser("conj91", help="index and abelianness of G^n")
    group_args(sp)
    sp.add_argument("-n", type=int, default=8)
    sp.add_argument("--bound", type=int, default=40, help="log_p of the index bound")
    sp.set_defaults(func=cmd_conj91)

    sp = sub.add_parser("powers", help="track [Q_c : Q_c^n] until the index freezes")
    sp.add_argument("group", help="fp file or built-in name")
    sp.add_argument("-p", "--prime", type=int, default=2)
    sp.add_argument("-n", type=int, default=4)
    sp.add_argument("--start", type=int, default=4)
    sp.add_argument("--max-class", type=int, default=8)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_powers)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    logging.basicConfig(level=getattr(logging, a.log_level.upper(), logging.WARNING))
    if a.command == "search" and not a.resume and a.root is None:
        ap.error("search needs a root unless --resume is given")
    if a.command == "pquotient" and a.klass is None:
        ap.error("pquotient needs -c CLASS")
    try:
        return a.func(a)
    except (argparse.ArgumentTypeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
