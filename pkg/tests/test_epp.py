import pytest
from hypothesis import given, settings, strategies as st

from o3.epp import (
    ProjectionError, Undefined, branch_geq, keys_q, manifest, merge, project_program, project_role,
)
from o3.gen import gen_program, widen
from o3.parser import parse_program
from o3.syntax import Branch, CommIP, Option, Recv, Var, substitute
from o3.wellformed import check_network

from golden import GOLDEN, projected


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_projection(corpus, name):
    assert projected(corpus[name]) == GOLDEN[name]


def test_projection_is_well_formed(corpus):
    for prog in corpus.values():
        _, net = project_program(prog)
        assert check_network(net).verdict


def test_manifest_lists_mangled_names(corpus):
    m = manifest(corpus["buyitem"], "buyitem")
    assert m["processes"]["seller"] == "buyitem_seller.proc"
    assert {(d["name"], d["role"]) for d in m["procedures"]} == {("BuyItem__s", "s"), ("BuyItem__b", "b")}


def test_knowledge_of_choice_is_required():
    prog = parse_program("""
        main {
            if p.(1 < 2) { p.1 -> q.x; } else { p.2 -> q.y; }
        }""")
    with pytest.raises(ProjectionError) as exc:
        project_program(prog)
    assert exc.value.role == "q"


def test_label_collision():
    prog = parse_program("""
        main {
            if p.(1 < 2) { p -> q [A]; } else { p -> q [A]; p.1 -> q.x; }
        }""")
    with pytest.raises(ProjectionError) as exc:
        project_program(prog)
    assert exc.value.reason == "LabelCollision"


def _br(line, label, body=()):
    return Branch((Option(line, (), label, body),))


def test_merge_branches_and_failures():
    a, b = (_br(1, "A"),), (_br(2, "B"),)
    m = merge(a, b)
    assert m[0].labels() == ("A", "B")
    assert merge(a, a) == a
    with pytest.raises(Undefined):
        merge(a, (_br(3, "A"),))
    with pytest.raises(Undefined):
        merge((Recv("x", 1, ()),), (Recv("y", 1, ()),))


branches = st.lists(st.sampled_from("ABCDEF"), min_size=1, max_size=3, unique=True).map(
    lambda ls: (Branch(tuple(Option(i + 1, (), l, ()) for i, l in enumerate(sorted(ls)))),))


def _try(f, *a):
    try:
        return f(*a)
    except Undefined:
        return None


@given(branches, branches)
def test_merge_commutes(a, b):
    assert _try(merge, a, b) == _try(merge, b, a)


@given(branches, branches, branches)
def test_merge_associates(a, b, c):
    ab, bc = _try(merge, a, b), _try(merge, b, c)
    left = _try(merge, ab, c) if ab is not None else None
    right = _try(merge, a, bc) if bc is not None else None
    if left is not None and right is not None:
        assert left == right


def test_branch_geq_examples():
    big = (Branch((Option(1, (), "A", ()), Option(2, (), "B", ()))),)
    small = (_br(1, "A"),)
    assert branch_geq(big, small) and not branch_geq(small, big)
    assert not branch_geq((_br(1, "A"),), (_br(2, "B"),))
    assert branch_geq(((Recv("x", 1, ())),), (Recv("x", 1, ()),))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_widen_is_geq(seed):
    import random
    prog = gen_program(seed)
    _, net = project_program(prog)
    rng = random.Random(seed)
    for P in net.values():
        assert branch_geq(widen(P, rng), P)


def test_keys_q():
    C = (CommIP(1, (), "p", "q", "x"),)
    assert keys_q(C, "q") == [(1, ())]
    assert keys_q(C, "r") == []


def test_substitution_at_owner_only(corpus):
    C = corpus["forwarding"].main
    decls = corpus["forwarding"].decl_map()
    for r in ("s", "c"):
        before = project_role(C, r, decls)
        after = project_role(substitute(C, Var("zz", "k"), 1), r, decls)
        assert before == after
