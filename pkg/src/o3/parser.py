"""Concrete syntax for choreographies (``.chor``) and a printer for both
choreographies and projected process programs.

    proc BuyItem(s, b; b.itemID) {
        b.itemID -> s.itemID;
        s.item = sell(itemID);
        s.item -> b.item;
    }
    main {
        BuyItem(seller, buyer1; 123);
    }

Keyed instructions are numbered 1, 2, ... in source order (declarations
first, then main).  Declaration bodies carry the placeholder token, main
carries the empty token.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .syntax import (
    UNIT, App, Block, Branch, Call, CallIP, Choose, Comm, CommIP, Compute, Cond, If, Option,
    PBlock, PCall, ProcedureDecl, ProcProcedureDecl, Program, Recv, Select, SelectIP, Send, SetVar,
    Val, Var, value_text,
)
from .tokens import PLACEHOLDER, TAU0


class ParseError(Exception):
    def __init__(self, message, pos=0, line=1, col=1, expected=()):
        self.message = message
        self.pos = pos
        self.line = line
        self.col = col
        self.expected = tuple(expected)
        super().__init__(f"{line}:{col}: {message}")


class DuplicateProcedureName(ParseError):
    pass


class UnknownProcedure(ParseError):
    pass


KEYWORDS = {"proc", "main", "if", "else", "true", "false", "null", "unit"}
BINOPS = ["<=", ">=", "==", "!=", "<", ">", "+", "-", "*"]
PREC = {"<=": 1, ">=": 1, "==": 1, "!=": 1, "<": 1, ">": 1, "+": 2, "-": 2, "*": 3}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*|\#[^\n]*)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|<=|>=|==|!=|[-+*<>=(){}\[\];,.@])
""", re.VERBOSE)


@dataclass
class Tok:
    kind: str
    text: str
    pos: int


def _lex(text: str) -> List[Tok]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise _error(text, pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            out.append(Tok(kind, m.group(), pos))
        pos = m.end()
    out.append(Tok("eof", "", len(text)))
    return out


def _error(text, pos, msg, expected=(), cls=ParseError):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return cls(msg, pos, line, col, expected)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex(text)
        self.i = 0
        self.line = 0
        self.labels = set()
        self.var_names = set()
        self.calls: List[Tuple[Call, int]] = []

    # token helpers
    def peek(self, k=0) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, k=0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "ident") and t.text == text

    def next(self) -> Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text) -> Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.peek().text or 'end of input'!r}", (text,))
        return self.next()

    def fail(self, msg, expected=(), cls=ParseError):
        raise _error(self.text, self.peek().pos, msg, expected, cls)

    def ident(self, what="identifier") -> str:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            self.fail(f"expected {what}, found {t.text or 'end of input'!r}", (what,))
        return self.next().text

    def fresh_line(self) -> int:
        self.line += 1
        return self.line

    # program
    def program(self) -> Program:
        decls: List[ProcedureDecl] = []
        seen = set()
        while self.at("proc"):
            start = self.peek().pos
            d = self.decl()
            if d.name in seen:
                raise _error(self.text, start, f"duplicate procedure {d.name}", cls=DuplicateProcedureName)
            seen.add(d.name)
            decls.append(d)
        self.expect("main")
        self.expect("{")
        main = self.chor(TAU0)
        self.expect("}")
        if self.peek().kind != "eof":
            self.fail("trailing input after main", ("end of input",))
        clash = self.labels & self.var_names
        if clash:
            raise ParseError(f"name used both as label and variable: {sorted(clash)[0]}")
        dmap = {d.name: d for d in decls}
        decls = [ProcedureDecl(d.name, d.roles, d.params, self.resolve(d.body, dmap)) for d in decls]
        main = self.resolve(main, {d.name: d for d in decls})
        return Program(tuple(decls), main, frozenset(self.labels))

    def decl(self) -> ProcedureDecl:
        self.expect("proc")
        name = self.ident("procedure name")
        self.expect("(")
        roles = [self.ident("role")]
        while self.at(","):
            self.next()
            roles.append(self.ident("role"))
        params = []
        if self.at(";"):
            self.next()
            if not self.at(")"):
                params.append(self.located_var())
                while self.at(","):
                    self.next()
                    params.append(self.located_var())
        self.expect(")")
        self.expect("{")
        body = self.chor(PLACEHOLDER)
        self.expect("}")
        return ProcedureDecl(name, tuple(roles), tuple(params), body)

    def located_var(self) -> Var:
        p = self.ident("process")
        self.expect(".")
        x = self.ident("variable")
        self.var_names.add(x)
        return Var(x, p)

    def chor(self, token) -> tuple:
        out = []
        while not self.at("}") and self.peek().kind != "eof":
            out.append(self.instr(token))
        return tuple(out)

    def instr(self, token):
        if self.at("{"):
            self.next()
            body = self.chor(token)
            self.expect("}")
            return Block(body)
        if self.at("if"):
            self.next()
            line = self.fresh_line()
            p = self.ident("process")
            self.expect(".")
            e = self.expr(p)
            self.expect("{")
            then = self.chor(token)
            self.expect("}")
            els = ()
            if self.at("else"):
                self.next()
                self.expect("{")
                els = self.chor(token)
                self.expect("}")
            return Cond(line, token, e, p, then, els)
        t = self.peek()
        if t.kind == "ident" and self.at("(", 1):
            return self.call(token)
        p = self.ident("process")
        if self.at("->"):
            self.next()
            line = self.fresh_line()
            q = self.ident("process")
            self.expect("[")
            lab = self.ident("label")
            self.expect("]")
            self.expect(";")
            self.labels.add(lab)
            return Select(line, token, p, q, lab)
        self.expect(".")
        if self.peek().kind == "ident" and self.at("=", 1):
            line = self.fresh_line()
            x = self.ident("variable")
            self.var_names.add(x)
            self.next()
            e = self.expr(p)
            self.expect(";")
            return Compute(line, token, x, p, e)
        line = self.fresh_line()
        e = self.expr(p)
        self.expect("->")
        q = self.ident("process")
        self.expect(".")
        x = self.ident("variable")
        self.var_names.add(x)
        self.expect(";")
        return Comm(line, token, p, e, q, x)

    def call(self, token):
        start = self.peek().pos
        name = self.ident("procedure name")
        line = self.fresh_line()
        self.expect("(")
        roles = [self.ident("process")]
        while self.at(","):
            self.next()
            roles.append(self.ident("process"))
        args = []
        if self.at(";"):
            self.next()
            if not self.at(")"):
                args.append(self.arg())
                while self.at(","):
                    self.next()
                    args.append(self.arg())
        self.expect(")")
        self.expect(";")
        c = Call(line, token, name, tuple(roles), tuple(args))
        self.calls.append((c, start))
        return c

    def arg(self):
        t = self.peek()
        if t.kind == "ident" and t.text not in KEYWORDS and self.at(".", 1):
            return self.located_var()
        v = self.literal()
        if self.at("@"):
            self.next()
            return Val(v, self.ident("process"))
        return Val(v, None)   # located once the callee is known

    def literal(self):
        t = self.peek()
        if t.kind == "int":
            self.next()
            return int(t.text)
        if self.at("-") and self.peek(1).kind == "int":
            self.next()
            return -int(self.next().text)
        if t.kind == "str":
            self.next()
            return json.loads(t.text)
        if t.kind == "ident" and t.text in ("true", "false", "null", "unit"):
            self.next()
            return {"true": True, "false": False, "null": None, "unit": UNIT}[t.text]
        self.fail("expected a literal", ("literal",))

    # expressions, evaluated at process p
    def expr(self, p, min_prec=1):
        lhs = self.primary(p)
        while True:
            t = self.peek()
            if t.kind != "op" or t.text not in PREC or PREC[t.text] < min_prec:
                return lhs
            op = self.next().text
            rhs = self.expr(p, PREC[op] + 1)
            lhs = App(op, (lhs, rhs))

    def primary(self, p):
        t = self.peek()
        if self.at("("):
            self.next()
            e = self.expr(p)
            self.expect(")")
            return e
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.at("(", 1):
                fn = self.next().text
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expr(p))
                    while self.at(","):
                        self.next()
                        args.append(self.expr(p))
                self.expect(")")
                return App(fn, tuple(args))
            if self.at(".", 1):
                q = self.next().text
                self.next()
                x = self.ident("variable")
                self.var_names.add(x)
                return Var(x, q)
            self.next()
            self.var_names.add(t.text)
            return Var(t.text, p)
        v = self.literal()
        if self.at("@"):
            self.next()
            return Val(v, self.ident("process"))
        return Val(v, p)

    # post-pass: check callees and locate literal arguments
    def resolve(self, C, dmap):
        out = []
        for ins in C:
            if isinstance(ins, Call):
                d = dmap.get(ins.proc_name)
                if d is None:
                    pos = next((s for c, s in self.calls if c.line == ins.line), 0)
                    raise _error(self.text, pos, f"unknown procedure {ins.proc_name}", cls=UnknownProcedure)
                args = []
                for j, a in enumerate(ins.args):
                    if isinstance(a, Val) and a.proc is None:
                        if j >= len(d.params) or d.params[j].proc not in d.roles or len(ins.roles) != len(d.roles):
                            raise ParseError(f"cannot locate argument {j + 1} of call to {d.name} on line {ins.line}")
                        a = Val(a.value, ins.roles[d.roles.index(d.params[j].proc)])
                    args.append(a)
                ins = Call(ins.line, ins.token, ins.proc_name, ins.roles, tuple(args))
            elif isinstance(ins, Cond):
                ins = Cond(ins.line, ins.token, ins.expr, ins.proc, self.resolve(ins.then, dmap),
                           self.resolve(ins.els, dmap))
            elif isinstance(ins, Block):
                ins = Block(self.resolve(ins.body, dmap))
            out.append(ins)
        return tuple(out)


def parse_program(text: str) -> Program:
    return _Parser(text).program()


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


# ---------------------------------------------------------------- rendering


def render_token(t) -> str:
    if t is PLACEHOLDER:
        return "t"
    return "[" + ",".join(str(x) for x in t) + "]"


def render_key(line, token) -> str:
    return f"({line},{render_token(token)})"


def render_expr(e, here: Optional[str] = None, top=True) -> str:
    """Render an expression; atoms located at ``here`` print unqualified."""
    if isinstance(e, Val):
        s = value_text(e.value)
        return s if e.proc is None or e.proc == here else f"{s}@{e.proc}"
    if isinstance(e, Var):
        return e.name if e.proc is None or e.proc == here else f"{e.proc}.{e.name}"
    if e.fn in PREC and len(e.args) == 2:
        s = f"{render_expr(e.args[0], here, False)} {e.fn} {render_expr(e.args[1], here, False)}"
        return s if top else f"({s})"
    return f"{e.fn}(" + ", ".join(render_expr(a, here) for a in e.args) + ")"


def _arg_text(a) -> str:
    if isinstance(a, Val):
        return f"{value_text(a.value)}@{a.proc}" if a.proc else value_text(a.value)
    return f"{a.proc}.{a.name}" if a.proc else a.name


def render_chor(C, indent=0, keys=False) -> str:
    """Render a choreography.  Runtime terms print in a readable but
    non-parseable form; ``keys=True`` appends each instruction's key."""
    pad = "    " * indent
    lines = []
    for ins in C:
        k = f"  // {render_key(ins.line, ins.token)}" if keys and not isinstance(ins, Block) else ""
        if isinstance(ins, Comm):
            lines.append(f"{pad}{ins.sender}.{render_expr(ins.expr, ins.sender)} -> {ins.receiver}.{ins.var};{k}")
        elif isinstance(ins, CommIP):
            lines.append(f"{pad}{ins.sender} ~> {ins.receiver}.{ins.var};{k}")
        elif isinstance(ins, Select):
            lines.append(f"{pad}{ins.sender} -> {ins.receiver} [{ins.label}];{k}")
        elif isinstance(ins, SelectIP):
            lines.append(f"{pad}{ins.sender} ~> {ins.receiver} [{ins.label}];{k}")
        elif isinstance(ins, Compute):
            lines.append(f"{pad}{ins.proc}.{ins.var} = {render_expr(ins.expr, ins.proc)};{k}")
        elif isinstance(ins, Cond):
            lines.append(f"{pad}if {ins.proc}.{render_expr(ins.expr, ins.proc)} {{{k}")
            if ins.then:
                lines.append(render_chor(ins.then, indent + 1, keys))
            if ins.els:
                lines.append(f"{pad}}} else {{")
                lines.append(render_chor(ins.els, indent + 1, keys))
            lines.append(f"{pad}}}")
        elif isinstance(ins, Call):
            args = "; " + ", ".join(_arg_text(a) for a in ins.args) if ins.args else ""
            lines.append(f"{pad}{ins.proc_name}({', '.join(ins.roles)}{args});{k}")
        elif isinstance(ins, CallIP):
            args = "; " + ", ".join(_arg_text(a) for a in ins.args) if ins.args else ""
            pend = ",".join(ins.pending)
            lines.append(f"{pad}<{pend}> {ins.proc_name}({', '.join(ins.roles)}{args}) {{{k}")
            if ins.body:
                lines.append(render_chor(ins.body, indent + 1, keys))
            lines.append(f"{pad}}}")
        elif isinstance(ins, Block):
            lines.append(f"{pad}{{")
            if ins.body:
                lines.append(render_chor(ins.body, indent + 1, keys))
            lines.append(f"{pad}}}")
        else:
            raise TypeError(type(ins).__name__)
    return "\n".join(lines)


def render_program(prog: Program, keys=False) -> str:
    parts = []
    for d in prog.decls:
        params = "; " + ", ".join(f"{v.proc}.{v.name}" for v in d.params) if d.params else ""
        parts.append(f"proc {d.name}({', '.join(d.roles)}{params}) {{")
        if d.body:
            parts.append(render_chor(d.body, 1, keys))
        parts.append("}")
    parts.append("main {")
    if prog.main:
        parts.append(render_chor(prog.main, 1, keys))
    parts.append("}")
    return "\n".join(parts) + "\n"


def render_proc(P, indent=0) -> str:
    pad = "    " * indent
    if not P:
        return pad + "0"
    lines = []
    for ins in P:
        if isinstance(ins, Send):
            lines.append(f"{pad}send {render_expr(ins.expr)} -> {ins.to} @{render_key(ins.line, ins.token)};")
        elif isinstance(ins, Recv):
            lines.append(f"{pad}recv {ins.var} @{render_key(ins.line, ins.token)};")
        elif isinstance(ins, SetVar):
            lines.append(f"{pad}{ins.var} := {render_expr(ins.expr)};")
        elif isinstance(ins, Choose):
            lines.append(f"{pad}choose {ins.to} [{ins.label}] @{render_key(ins.line, ins.token)};")
        elif isinstance(ins, Branch):
            lines.append(f"{pad}branch {{")
            for o in ins.options:
                lines.append(f"{pad}    ({o.line},{render_token(o.token)},{o.label}) => {{")
                lines.append(render_proc(o.body, indent + 2))
                lines.append(f"{pad}    }}")
            lines.append(f"{pad}}}")
        elif isinstance(ins, If):
            lines.append(f"{pad}if {render_expr(ins.expr)} {{")
            lines.append(render_proc(ins.then, indent + 1))
            lines.append(f"{pad}}} else {{")
            lines.append(render_proc(ins.els, indent + 1))
            lines.append(f"{pad}}}")
        elif isinstance(ins, PCall):
            args = "; " + ", ".join(render_expr(a) for a in ins.args) if ins.args else ""
            lines.append(f"{pad}call {ins.proc_name}({', '.join(ins.procs)}{args}) "
                         f"@{render_key(ins.line, ins.token)};")
        elif isinstance(ins, PBlock):
            lines.append(f"{pad}{{")
            lines.append(render_proc(ins.body, indent + 1))
            lines.append(f"{pad}}}")
        else:
            raise TypeError(type(ins).__name__)
    return "\n".join(lines)


def render_proc_decl(d: ProcProcedureDecl) -> str:
    params = "; " + ", ".join(d.params) if d.params else ""
    return f"proc {d.name}({', '.join(d.roles)}{params}) {{\n{render_proc(d.body, 1)}\n}}"
