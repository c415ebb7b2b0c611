import pytest

from o3.chor import (
    Candidate, IllegalTransition, apply, enabled, initial_config, run,
)
from o3.evaluate import ProcState, scenario
from o3.parser import parse_program
from o3.syntax import CallIP, Comm, CommIP, stats


def _cfg(prog, name):
    return initial_config(prog, scenario(name, prog.processes()))


def test_main_keys_buyitem(corpus):
    assert [i.key for i in corpus["buyitem"].main] == [(4, ()), (5, ())]


def test_first_instantiates_with_call_token(corpus):
    c = _cfg(corpus["buyitem"], "buyitem")
    first = next(x for x in enabled(c) if x.rule == "C-First" and x.key == (4, ()))
    c2 = apply(c, first)
    ip = c2.C[0]
    assert isinstance(ip, CallIP)
    assert [i.key for i in stats(ip.body)] == [(1, (4,)), (2, (4,)), (3, (4,))]


def test_buyitem_initial_candidates(corpus):
    c = _cfg(corpus["buyitem"], "buyitem")
    got = sorted((x.rule, x.actor, x.key) for x in enabled(c))
    assert got == [("C-First", "buyer1", (4, ())), ("C-First", "buyer2", (5, ())),
                   ("C-First", "seller", (4, ())), ("C-First", "seller", (5, ()))]


def test_buyitem_in_order_run(corpus):
    t = run(_cfg(corpus["buyitem"], "buyitem"), "in-order")
    assert t.stopped == "terminated" and len(t) == 14
    # stock of one: the first buyer gets the item, the second gets nothing
    f = t.final
    assert f.state("seller").get("stock") == 0


def test_random_runs_terminate(corpus):
    for name, prog in corpus.items():
        for seed in range(5):
            t = run(_cfg(prog, name), "random", bound=500, seed=seed)
            assert t.stopped == "terminated", (name, seed)


def test_runs_are_deterministic(corpus):
    c = _cfg(corpus["streamit"], "streamit")
    a = run(c, "random", seed=3)
    b = run(c, "random", seed=3)
    assert [s.state_hash for s in a.steps] == [s.state_hash for s in b.steps]


def test_out_of_order_send():
    prog = parse_program("main { p.1 -> q.x; r.2 -> s.y; }")
    c = initial_config(prog)
    assert {x.actor for x in enabled(c)} == {"p", "r"}


def test_receive_substitutes_rest():
    prog = parse_program("main { p.5 -> q.x; q.(x + 1) -> r.y; }")
    c = initial_config(prog)
    c = apply(c, enabled(c)[0])
    assert isinstance(c.C[0], CommIP)
    # q's send is not enabled until x is bound
    assert [x.rule for x in enabled(c)] == ["C-Recv"]
    c = apply(c, enabled(c)[0])
    assert isinstance(c.C[0], Comm)
    c = apply(c, enabled(c)[0])
    c = apply(c, enabled(c)[0])
    assert c.terminated()


def test_selection_blocks_receiver_only():
    prog = parse_program("main { p -> q [L]; p.1 -> q.x; p.2 -> r.y; }")
    c = initial_config(prog)
    keys = {(x.actor, x.key) for x in enabled(c)}
    assert ("p", (1, ())) in keys and ("p", (2, ())) in keys and ("p", (3, ())) in keys


def test_guard_effects_and_branching():
    prog = parse_program("""
        main { if p.(itemsLeft() > 0) { p.1 -> q.x; } else { p.2 -> q.y; } }""")
    c = initial_config(prog, {"p": ProcState.of(remaining=1), "q": ProcState()})
    c = apply(c, enabled(c)[0])
    assert c.state("p").get("remaining") == 0


def test_illegal_transition():
    prog = parse_program("main { p.1 -> q.x; }")
    c = initial_config(prog)
    with pytest.raises(IllegalTransition):
        apply(c, Candidate("C-Recv", "q", (1, ()), (0,)))
