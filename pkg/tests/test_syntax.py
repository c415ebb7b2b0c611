import pytest

from o3.syntax import (
    UNIT, App, Block, Call, CallIP, CaptureError, Comm, CommIP, Compute, Label, LocationMismatch,
    ArityMismatch, PBlock, ProcedureDecl, Recv, Send, SetVar, Val, Var, block_then, canonical_json,
    digest, fv, fv_proc, instantiate_procedure, keys_chor, normalize_proc, pblock_then, pn, stats,
    substitute, substitute_proc, value_tag,
)
from o3.tokens import PLACEHOLDER


def comm(l, p, e, q, x, t=()):
    return Comm(l, t, p, e, q, x)


def test_value_tags_separate_bool_and_int():
    assert Val(True, "p") != Val(1, "p")
    assert value_tag(UNIT) != value_tag(None)
    assert Label("A") == Label("A")


def test_fv_and_binders():
    C = (comm(1, "p", Var("x", "p"), "q", "y"), comm(2, "q", Var("y", "q"), "p", "z"))
    assert fv(C) == {Var("x", "p")}
    # a communication in progress binds its variable as well
    assert fv((CommIP(1, (), "p", "q", "y"), comm(2, "q", Var("y", "q"), "p", "z"))) == set()


def test_substitution_stops_at_rebinding():
    C = (Compute(1, (), "x", "p", Var("x", "p")), Compute(2, (), "y", "p", Var("x", "p")))
    out = substitute(C, Var("x", "p"), 5)
    assert out[0].expr == Val(5, "p")
    assert out[1].expr == Var("x", "p")


def test_process_substitution():
    P = (Send("q", 1, (), Var("x")), Recv("x", 2, ()), Send("q", 3, (), Var("x")))
    out = substitute_proc(P, "x", 7)
    assert out[0].expr == Val(7) and out[2].expr == Var("x")
    assert fv_proc(P) == {Var("x")}


def test_instantiation_rewrites_roles_params_and_token():
    d = ProcedureDecl("X", ("a", "b"), (Var("v", "a"),),
                      (comm(1, "a", Var("v", "a"), "b", "w", PLACEHOLDER),))
    (c,) = instantiate_procedure(d, ("p", "q"), (Val(3, "p"),), (4,))
    assert c == comm(1, "p", Val(3, "p"), "q", "w", (4,))
    with pytest.raises(ArityMismatch):
        instantiate_procedure(d, ("p",), (Val(3, "p"),), (4,))
    with pytest.raises(LocationMismatch):
        instantiate_procedure(d, ("p", "q"), (Val(3, "q"),), (4,))


def test_instantiation_detects_capture():
    # argument q.w would be captured by the body's binder of b.w
    d = ProcedureDecl("X", ("a", "b"), (Var("v", "b"),),
                      (comm(1, "a", Val(1, "a"), "b", "w", PLACEHOLDER),
                       Compute(2, PLACEHOLDER, "u", "b", App("+", (Var("v", "b"), Var("w", "b"))))))
    with pytest.raises(CaptureError):
        instantiate_procedure(d, ("p", "q"), (Var("w", "q"),), (4,))


def test_blocks():
    assert block_then((), (1,)) == (1,)
    assert block_then((comm(1, "p", Val(1, "p"), "q", "x"),), ())[0].__class__ is Block
    P = (PBlock((SetVar("x", Val(1)),)),)
    assert normalize_proc(P) == (SetVar("x", Val(1)),)
    assert normalize_proc((PBlock(()), SetVar("x", Val(1)))) == (SetVar("x", Val(1)),)
    assert pblock_then((), P) == P


def test_stats_keys_pn(corpus):
    prog = corpus["buyitem"]
    assert pn(prog.main) == {"seller", "buyer1", "buyer2"}
    assert keys_chor(prog.main) == [(4, ()), (5, ())]
    body = instantiate_procedure(prog.decls[0], ("seller", "buyer1"), (Val(123, "buyer1"),), (4,))
    assert keys_chor(body) == [(1, (4,)), (2, (4,)), (3, (4,))]
    ip = CallIP(4, (), ("buyer1",), "BuyItem", ("seller", "buyer1"), (Val(123, "buyer1"),), body)
    assert len(stats((ip,))) == 4


def test_canonical_digest_is_stable():
    a = comm(1, "p", Val(1, "p"), "q", "x")
    assert digest(a) == digest(comm(1, "p", Val(1, "p"), "q", "x"))
    assert digest(a) != digest(comm(1, "p", Val(True, "p"), "q", "x"))
    assert canonical_json(UNIT) == '{"unit":true}'
