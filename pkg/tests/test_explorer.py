import json

import pytest

from pgtower.cli import main, split_filters
from pgtower.explorer import (Checkpoint, CheckpointError, make_filter, run_pipeline, search,
                              survivor_certificates)
from pgtower.filters import FAIL, PASS, default_fixture, fixture_of

from groups import elementary, q8

ROOT_FILTERS = ["ab:2,2", "rank:3"]


def _run(**kw):
    return search(elementary(2, 2), ROOT_FILTERS, 3, **kw)


@pytest.fixture(scope="module")
def baseline():
    return _run(chunk=4)


def test_search_counts_are_consistent(baseline):
    assert baseline.status == "complete"
    for k, st in baseline.stats.items():
        assert st["enumerated"] == sum(st["pruned"].values()) + st["after"].get("rank:3", 0)
    assert baseline.stats["2"]["enumerated"] == 7
    assert baseline.stats["3"]["surviving"] == len(baseline.survivors) > 0


def test_search_is_independent_of_worker_count(baseline):
    other = _run(chunk=4, workers=2)
    assert survivor_certificates(other) == survivor_certificates(baseline)
    assert other.stats == baseline.stats


def test_budget_and_resume_reproduce_full_run(tmp_path, baseline):
    path = str(tmp_path / "ck.json")
    res = _run(chunk=4, budget=5, checkpoint_path=path)
    assert res.status == "budget" and res.evaluated == 5
    rounds = 0
    while res.status == "budget":
        res = search(None, ROOT_FILTERS, 3, chunk=4, budget=5, checkpoint_path=path, resume=True)
        rounds += 1
    assert rounds > 1
    assert survivor_certificates(res) == survivor_certificates(baseline)
    assert res.stats == baseline.stats
    assert res.evaluated == baseline.evaluated


def test_checkpoint_roundtrip_is_byte_exact(tmp_path):
    path = str(tmp_path / "ck.json")
    _run(budget=3, checkpoint_path=path)
    text = open(path).read()
    assert Checkpoint.loads(text).dumps() == text


def test_corrupted_checkpoint_is_rejected(tmp_path):
    path = str(tmp_path / "ck.json")
    _run(budget=3, checkpoint_path=path)
    d = json.loads(open(path).read())
    d["state"]["evaluated"] += 1
    with pytest.raises(CheckpointError):
        Checkpoint.loads(json.dumps(d))
    with pytest.raises(CheckpointError):
        Checkpoint.loads("{not json")


def test_resume_checks_fixture_and_pipeline(tmp_path):
    path = str(tmp_path / "ck.json")
    _run(budget=3, checkpoint_path=path)
    with pytest.raises(CheckpointError):
        search(None, ROOT_FILTERS, 3, checkpoint_path=path, resume=True, fixture=default_fixture())
    with pytest.raises(CheckpointError):
        search(None, ["rank:3"], 3, checkpoint_path=path, resume=True)
    with pytest.raises(CheckpointError):
        search(None, ROOT_FILTERS, 4, checkpoint_path=path, resume=True)


def test_sampled_mode_is_reproducible():
    a = _run(mode="sampled", samples=4, seed=9)
    b = _run(mode="sampled", samples=4, seed=9, workers=2)
    assert survivor_certificates(a) == survivor_certificates(b)
    assert a.stats["2"]["enumerated"] <= 4


def test_unknown_filter_and_mode_are_rejected():
    with pytest.raises(ValueError):
        _run(mode="greedy")
    with pytest.raises(ValueError):
        search(elementary(2, 2), ["nonsense"], 2)


def test_pipeline_stops_at_first_failure():
    pipeline = [(s, make_filter(s, None)) for s in ("ab:2,2,2", "rank:3")]
    vs = run_pipeline(q8(), pipeline)
    assert [v.status for v in vs] == [FAIL]
    assert vs[0].name == "ab:2,2,2"


def test_profile_filters_need_a_fixture():
    with pytest.raises(ValueError):
        make_filter("profile2", None)
    f = make_filter("profile2", fixture_of(q8()))
    assert f(q8()).status == PASS


def test_filter_list_splitting():
    assert split_filters("ab:2,2,2,2,rank:5") == ["ab:2,2,2,2", "rank:5"]
    assert split_filters("ab,profile2,critical") == ["ab", "profile2", "critical"]


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["pquotient", "koch-q2", "-c", "1"]) == 0
    assert main(["search", "ea2^2", "--filters", "ab:2,2,rank:3", "--max-class", "3"]) == 0
    assert main(["search", "ea2^2", "--filters", "ab:4", "--max-class", "2"]) == 1
    ck = str(tmp_path / "ck.json")
    assert main(["search", "ea2^2", "--filters", "rank:3", "--max-class", "3",
                 "--budget", "2", "--checkpoint", ck]) == 3
    assert main(["search", "--resume", "--filters", "rank:3", "--max-class", "3", "--checkpoint", ck]) == 0
    assert main(["search", "ea2^2", "--filters", "bogus", "--max-class", "2"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["pquotient", "koch-q2"])
    assert exc.value.code == 2
    assert main(["moribund", "ea2^2", "--depth", "0"]) == 1
    capsys.readouterr()


def test_cli_json_output(capsys):
    assert main(["pquotient", "koch-q2", "-c", "2", "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert (info["order_log"], info["abelianization"]) == (9, [2, 2, 2, 2])
    assert (info["multiplicator_rank"], info["nuclear_rank"]) == (11, 6)
