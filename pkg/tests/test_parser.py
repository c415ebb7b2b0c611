import pytest

from o3 import CORPUS
from o3.parser import (
    DuplicateProcedureName, ParseError, UnknownProcedure, parse_program, render_proc, render_program,
)
from o3.syntax import Call, Comm, Compute, Cond, Label, Select, Val, Var, keys_chor
from o3.tokens import PLACEHOLDER


@pytest.mark.parametrize("name", CORPUS)
def test_round_trip(corpus, name):
    prog = corpus[name]
    assert parse_program(render_program(prog)) == prog


def test_buyitem_lines_and_tokens(corpus):
    prog = corpus["buyitem"]
    (d,) = prog.decls
    assert [i.line for i in d.body] == [1, 2, 3]
    assert all(i.token is PLACEHOLDER for i in d.body)
    assert keys_chor(prog.main) == [(4, ()), (5, ())]
    c1, c2 = prog.main
    assert isinstance(c1, Call) and c1.roles == ("seller", "buyer1")
    assert c1.args == (Val(123, "buyer1"),)


def test_expressions_are_located():
    prog = parse_program("main { p.f(x, 3) -> q.y; q.z = y + 1; }")
    c, k = prog.main
    assert isinstance(c, Comm) and c.expr.args == (Var("x", "p"), Val(3, "p"))
    assert isinstance(k, Compute) and k.expr.args == (Var("y", "q"), Val(1, "q"))


def test_selection_and_conditional():
    prog = parse_program("main { if p.x < 1 { p -> q [L]; } else { p -> q [R]; } }")
    (cond,) = prog.main
    assert isinstance(cond, Cond) and cond.proc == "p"
    assert isinstance(cond.then[0], Select) and cond.then[0].label == "L"
    assert [cond.line, cond.then[0].line, cond.els[0].line] == [1, 2, 3]
    assert prog.labels == {"L", "R"}


@pytest.mark.parametrize("text, exc", [
    ("main { p.1 -> q.x }", ParseError),
    ("main { X(p); }", UnknownProcedure),
    ("proc X(p) { } proc X(q) { } main { }", DuplicateProcedureName),
    ("main { p.1 -> q.L; p -> q [L]; }", ParseError),
])
def test_errors(text, exc):
    with pytest.raises(exc):
        parse_program(text)


def test_error_positions():
    with pytest.raises(ParseError) as info:
        parse_program("main {\n  p.1 -> ;\n}")
    assert info.value.line == 2


def test_empty_behaviour_renders_as_zero():
    assert render_proc(()) .strip() == "0"
