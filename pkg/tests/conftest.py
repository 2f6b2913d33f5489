import os

import pytest

from pgtower.descendants import immediate_descendants
from pgtower.pcp import PcPresentation

SLOW = os.environ.get("PGTOWER_SLOW") == "1"


def generate_groups(max_log: int, prime: int = 2, max_tree_rank: int = 4):
    """Groups of order ``p^k`` (k <= max_log) with their generator rank.

    Built by walking the descendant tree from each elementary abelian root,
    bounding each step so no child exceeds ``p^max_log``.  Roots of rank
    above ``max_tree_rank`` are included without their descendants (their
    automorphism groups exceed the default matrix-group cap).
    """
    out = []
    for d in range(1, max_log + 1):
        root = PcPresentation.elementary_abelian(prime, d)
        if d > max_tree_rank:
            out.append((root, d))
            continue
        todo = [(root, None)]
        while todo:
            G, auts = todo.pop()
            out.append((G, d))
            if G.ngens >= max_log:
                continue
            batch = immediate_descendants(G, auts, with_automorphisms=True, max_step=max_log - G.ngens)
            for ch in batch:
                todo.append((ch.presentation, ch.automorphisms))
    out.sort(key=lambda t: (t[0].ngens, t[1]))
    return out


@pytest.fixture(scope="session")
def groups_upto_64():
    return generate_groups(6)


@pytest.fixture(scope="session")
def groups_upto_32(groups_upto_64):
    return [(G, d) for G, d in groups_upto_64 if G.ngens <= 5]


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
