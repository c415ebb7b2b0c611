from dataclasses import replace

import pytest

from o3.chor import enabled, initial_config
from o3.evaluate import scenario
from o3.gen import GenConfig, gen_program
from o3.parser import parse_program
from o3.syntax import Call
from o3.verify import (
    ample, check_epp_correspondence, explore_chor, final_states, find_civ,
)

SMALL = ("buyitem", "forwarding", "producers", "procx")


def _c0(prog, name, k=1):
    return initial_config(prog, scenario(name, prog.processes(), k))


@pytest.mark.parametrize("name", SMALL)
def test_corpus_explores_clean(corpus, name):
    r = explore_chor(_c0(corpus[name], name))
    assert r.ok and not r.truncated and r.states > 1


def test_streamit_zero_items(corpus):
    r = explore_chor(_c0(corpus["streamit"], "streamit", 0))
    assert r.ok and not r.truncated and r.states == 576


@pytest.mark.parametrize("name", SMALL)
def test_epp_correspondence(corpus, name):
    r = check_epp_correspondence(_c0(corpus[name], name))
    assert r.ok and not r.truncated


def test_truncation_is_reported(corpus):
    r = explore_chor(_c0(corpus["procx"], "procx"), depth=3)
    assert r.ok and r.truncated
    r = explore_chor(_c0(corpus["procx"], "procx"), states=10)
    assert r.truncated


def test_progress_violation_has_witness():
    prog = parse_program("main { p.1 -> q.x; }")
    c = initial_config(prog)
    c = replace(c, C=c.C + (Call(2, (), "Missing", ("p",)),))
    r = explore_chor(c, checks=("progress",))
    assert [v.property for v in r.violations] == ["progress"]
    assert [s.rule for s in r.violations[0].witness] == ["C-Send", "C-Recv"]


def test_report_json_shape(corpus):
    j = explore_chor(_c0(corpus["producers"], "producers"), reduce=True).to_json()
    assert j["schemaVersion"] == 1 and j["reduced"] is True and j["ok"] is True


# ---------------------------------------------------------------- reduction


@pytest.mark.parametrize("name", SMALL + ("streamit",))
def test_reduction_keeps_final_states(corpus, name):
    c0 = _c0(corpus[name], name, 0 if name == "streamit" else 1)
    full = final_states(c0)
    assert final_states(c0, reduce=True) == full
    assert all(c.terminated() for c in full)


def test_reduction_on_generated_programs():
    cfg = GenConfig(max_processes=4, max_instructions=8)
    compared = 0
    for seed in range(150):
        prog = gen_program(seed, cfg)
        try:
            full = final_states(prog, states=20000)
        except RuntimeError:
            continue
        assert final_states(prog, reduce=True) == full, seed
        compared += 1
    assert compared >= 140


def test_reduction_only_picks_independent_sessions(corpus):
    c0 = _c0(corpus["streamit"], "streamit")
    a = ample(c0, enabled(c0))
    assert {x.path[0] for x in a} == {0}
    # forwarding: later items read variables bound by earlier ones
    c0 = _c0(corpus["forwarding"], "forwarding")
    assert len({x.path[0] for x in ample(c0, enabled(c0))}) == 1


def test_reduced_exploration_is_smaller(corpus):
    c0 = _c0(corpus["streamit"], "streamit", 1)
    r = explore_chor(c0, reduce=True)
    assert r.ok and not r.truncated and r.states < 1000
    e = check_epp_correspondence(c0, reduce=True)
    assert e.ok and e.reduced


# ---------------------------------------------------------------- CIV


def test_civ_forwarding_keys_off(corpus):
    r = find_civ(corpus["forwarding"], "off", target=("c", "txt"))
    assert r.witness is not None and len(r.witness) <= 12
    assert r.detail["variable"] == "txt" and str(r.detail["payload"]).startswith("key#")


def test_civ_procx_no_tokens(corpus):
    prog = corpus["procx"]
    r = find_civ(prog, "no-tokens", scenario("procx", prog.processes()))
    assert r.witness is not None
    exp, got = r.detail["expectedKey"], r.detail["messageKey"]
    # same line, different session token: an interprocedural mix-up
    assert exp[0] == got[0] and exp[1] != got[1]


@pytest.mark.parametrize("name", ["forwarding", "procx"])
def test_civ_none_with_keys(corpus, name):
    prog = corpus[name]
    r = find_civ(prog, "on", scenario(name, prog.processes()))
    assert r.witness is None and not r.truncated
