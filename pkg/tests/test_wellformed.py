from dataclasses import replace

from o3.chor import Message, apply, enabled, initial_config
from o3.parser import parse_program
from o3.syntax import Comm, CommIP, Recv, Val, Var
from o3.wellformed import check_config, check_network, check_program


def _rules(C, K=None, procs=("p", "q")):
    prog = parse_program("main { p.1 -> q.x; }")
    cfg = initial_config(prog)
    cfg = replace(cfg, C=C, K=tuple(sorted((K or {p: () for p in procs}).items())))
    return check_config(cfg).rules()


def test_corpus_is_well_formed(corpus):
    for prog in corpus.values():
        assert check_program(prog).verdict


def test_reachable_corpus_states_stay_well_formed(corpus):
    for prog in corpus.values():
        cfg = initial_config(prog)
        for _ in range(40):
            cands = enabled(cfg)
            if not cands:
                break
            cfg = apply(cfg, cands[-1])
            assert check_config(cfg).verdict


def test_duplicate_keys():
    C = (Comm(1, (), "p", Val(1, "p"), "q", "x"), Comm(1, (), "p", Val(2, "p"), "q", "y"))
    assert "C-WF" in _rules(C)


def test_receive_without_message():
    assert "C-WF-Recv" in _rules((CommIP(1, (), "p", "q", "x"),))


def test_send_with_message_in_flight():
    C = (Comm(1, (), "p", Val(1, "p"), "q", "x"),)
    K = {"p": (), "q": (Message(1, (), 5, "p"),)}
    assert "C-WF-Send" in _rules(C, K)


def test_stray_message():
    K = {"p": (), "q": (Message(9, (), 5, "p"),)}
    assert "C-WF-Messages" in _rules((), K)


def test_free_variable():
    C = (Comm(1, (), "p", Var("z", "p"), "q", "x"),)
    assert "C-WF" in _rules(C)


def test_locality_lint():
    prog = parse_program("main { p.(1 + 2) -> q.x; q.x -> r.y; }")
    assert check_program(prog).verdict
    bad = parse_program("main { p.1 -> q.x; r.(x + 1) -> p.y; }")
    assert not check_program(bad).verdict


def test_network_duplicate_keys():
    assert check_network({"q": (Recv("x", 1, ()),)}).verdict
    rep = check_network({"q": (Recv("x", 1, ()), Recv("y", 1, ()))})
    assert rep.rules() == ["N-WF"]


def test_report_json():
    rep = check_network({"q": (Recv("x", 1, ()), Recv("y", 1, ()))})
    j = rep.to_json()
    assert j["verdict"] is False and j["violations"][0]["rule"] == "N-WF"
