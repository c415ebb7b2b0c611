"""Abstract syntax for choreographies and processes, plus the syntactic
auxiliaries (pn, fv, stats, keys, substitution, block concatenation).

Choreographies and process behaviours are plain tuples of instructions; the
terminating ``0`` is implicit.  Everything is immutable and hashable so
configurations can go straight into visited sets.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

from .tokens import PLACEHOLDER, Key, Token, is_concrete, key_json


# ---------------------------------------------------------------- values


class _Unit:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "()"

    def __reduce__(self):
        return (_Unit, ())


UNIT = _Unit()


@dataclass(frozen=True)
class Label:
    name: str

    def __str__(self):
        return self.name


def value_tag(v) -> tuple:
    # bool is an int subclass; keep True and 1 apart in keys and messages
    return (type(v).__name__, v)


def value_json(v):
    if v is UNIT:
        return {"unit": True}
    if isinstance(v, Label):
        return {"label": v.name}
    if isinstance(v, tuple):
        return {"tuple": [value_json(x) for x in v]}
    return v


def value_text(v) -> str:
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if v is UNIT:
        return "()"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(value_text(x) for x in v) + "]"
    return str(v)


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True, eq=False)
class Val:
    """A value, located at ``proc`` in choreographies (``v@p``)."""

    value: Any
    proc: Optional[str] = None

    def _k(self):
        return (value_tag(self.value), self.proc)

    def __eq__(self, other):
        return isinstance(other, Val) and self._k() == other._k()

    def __hash__(self):
        return hash(("Val",) + self._k())


@dataclass(frozen=True)
class Var:
    """A variable; ``proc`` is set for located choreography variables ``p.x``."""

    name: str
    proc: Optional[str] = None


@dataclass(frozen=True)
class App:
    fn: str
    args: Tuple["Expr", ...] = ()


Atom = Union[Val, Var]
Expr = Union[Val, Var, App]


def expr_atoms(e: Expr) -> Iterator[Atom]:
    if isinstance(e, App):
        for a in e.args:
            yield from expr_atoms(a)
    else:
        yield e


def expr_vars(e: Expr) -> Set[Var]:
    return {a for a in expr_atoms(e) if isinstance(a, Var)}


def closed(e: Expr) -> bool:
    return not any(isinstance(a, Var) for a in expr_atoms(e))


# ---------------------------------------------------------------- choreographies


class ChorInstr:
    """Base class for keyed choreography instructions."""

    line: int
    token: Any

    @property
    def key(self) -> Key:
        return (self.line, self.token)


@dataclass(frozen=True)
class Comm(ChorInstr):
    line: int
    token: Any
    sender: str
    expr: Expr
    receiver: str
    var: str


@dataclass(frozen=True)
class CommIP(ChorInstr):
    """Communication in progress: sent, not yet received."""

    line: int
    token: Any
    sender: str
    receiver: str
    var: str


@dataclass(frozen=True)
class Select(ChorInstr):
    line: int
    token: Any
    sender: str
    receiver: str
    label: str


@dataclass(frozen=True)
class SelectIP(ChorInstr):
    line: int
    token: Any
    sender: str
    receiver: str
    label: str


@dataclass(frozen=True)
class Compute(ChorInstr):
    line: int
    token: Any
    var: str
    proc: str
    expr: Expr


@dataclass(frozen=True)
class Cond(ChorInstr):
    line: int
    token: Any
    expr: Expr
    proc: str
    then: "Chor"
    els: "Chor"


@dataclass(frozen=True)
class Call(ChorInstr):
    line: int
    token: Any
    proc_name: str
    roles: Tuple[str, ...]
    args: Tuple[Atom, ...] = ()


@dataclass(frozen=True)
class CallIP(ChorInstr):
    """Call in progress; ``pending`` roles have not entered yet."""

    line: int
    token: Any
    pending: Tuple[str, ...]
    proc_name: str
    roles: Tuple[str, ...]
    args: Tuple[Atom, ...]
    body: "Chor"


@dataclass(frozen=True)
class Block:
    body: "Chor"


Instr = Union[Comm, CommIP, Select, SelectIP, Compute, Cond, Call, CallIP, Block]
Chor = Tuple[Instr, ...]

RUNTIME_TYPES = (CommIP, SelectIP, CallIP)


@dataclass(frozen=True)
class ProcedureDecl:
    name: str
    roles: Tuple[str, ...]
    params: Tuple[Var, ...]
    body: Chor


@dataclass(frozen=True)
class Program:
    decls: Tuple[ProcedureDecl, ...]
    main: Chor
    labels: FrozenSet[str] = frozenset()

    def decl_map(self) -> Dict[str, ProcedureDecl]:
        return {d.name: d for d in self.decls}

    def processes(self) -> Tuple[str, ...]:
        return tuple(sorted(pn(self.main)))


# ---------------------------------------------------------------- processes


@dataclass(frozen=True)
class Send:
    to: str
    line: int
    token: Any
    expr: Expr

    @property
    def key(self):
        return (self.line, self.token)


@dataclass(frozen=True)
class Recv:
    var: str
    line: int
    token: Any
    # projection metadata, only consulted by keyless transports
    sender: Optional[str] = field(default=None, compare=False)

    @property
    def key(self):
        return (self.line, self.token)


@dataclass(frozen=True)
class SetVar:
    var: str
    expr: Expr


@dataclass(frozen=True)
class Choose:
    to: str
    line: int
    token: Any
    label: str

    @property
    def key(self):
        return (self.line, self.token)


@dataclass(frozen=True)
class Option:
    line: int
    token: Any
    label: str
    body: "Behavior"

    @property
    def key(self):
        return (self.line, self.token)


@dataclass(frozen=True)
class Branch:
    options: Tuple[Option, ...]

    def labels(self) -> Tuple[str, ...]:
        return tuple(o.label for o in self.options)


@dataclass(frozen=True)
class If:
    expr: Expr
    then: "Behavior"
    els: "Behavior"


@dataclass(frozen=True)
class PCall:
    proc_name: str
    procs: Tuple[str, ...]
    args: Tuple[Expr, ...]
    line: int
    token: Any

    @property
    def key(self):
        return (self.line, self.token)


@dataclass(frozen=True)
class PBlock:
    body: "Behavior"


PInstr = Union[Send, Recv, SetVar, Choose, Branch, If, PCall, PBlock]
Behavior = Tuple[PInstr, ...]
Network = Dict[str, Behavior]


@dataclass(frozen=True)
class ProcProcedureDecl:
    """``X_{i,j}``: declaration ``source`` projected at its role ``role``."""

    name: str
    roles: Tuple[str, ...]
    params: Tuple[str, ...]
    body: Behavior
    source: str = ""
    role: str = ""


# ---------------------------------------------------------------- errors


class SyntaxFault(Exception):
    pass


class ArityMismatch(SyntaxFault):
    pass


class LocationMismatch(SyntaxFault):
    pass


class CaptureError(SyntaxFault):
    """A variable argument would be captured by a binder in the callee."""


# ---------------------------------------------------------------- pn / stats / keys


def pn(term) -> Set[str]:
    if isinstance(term, tuple):
        out: Set[str] = set()
        for ins in term:
            out |= pn(ins)
        return out
    if isinstance(term, (Val, Var)):
        return {term.proc} if term.proc is not None else set()
    if isinstance(term, App):
        out = set()
        for a in term.args:
            out |= pn(a)
        return out
    if isinstance(term, (Comm, Select)):
        return {term.sender, term.receiver}
    if isinstance(term, (CommIP, SelectIP)):
        return {term.receiver}
    if isinstance(term, Compute):
        return {term.proc}
    if isinstance(term, Cond):
        return {term.proc} | pn(term.then) | pn(term.els)
    if isinstance(term, (Call, CallIP)):
        return set(term.roles)
    if isinstance(term, Block):
        return pn(term.body)
    raise TypeError(f"pn undefined on {type(term).__name__}")


def stats(C: Chor) -> List[Instr]:
    out: List[Instr] = []
    for ins in C:
        if isinstance(ins, Block):
            out.extend(stats(ins.body))
        elif isinstance(ins, Cond):
            out.append(ins)
            out.extend(stats(ins.then))
            out.extend(stats(ins.els))
        elif isinstance(ins, CallIP):
            out.append(ins)
            out.extend(stats(ins.body))
        else:
            out.append(ins)
    return out


def keys_chor(C: Chor) -> List[Key]:
    return [ins.key for ins in stats(C)]


def keys_proc(P: Behavior) -> List[Key]:
    out: List[Key] = []
    for ins in P:
        if isinstance(ins, (Send, Recv, Choose, PCall)):
            out.append(ins.key)
        elif isinstance(ins, Branch):
            out.extend(o.key for o in ins.options)
            for o in ins.options:
                out.extend(keys_proc(o.body))
        elif isinstance(ins, If):
            out.extend(keys_proc(ins.then))
            out.extend(keys_proc(ins.els))
        elif isinstance(ins, PBlock):
            out.extend(keys_proc(ins.body))
    return out


def has_runtime_terms(C: Chor) -> bool:
    return any(isinstance(i, RUNTIME_TYPES) for i in stats(C))


def atom_vars(atoms: Iterable[Atom]) -> Set[Var]:
    return {a for a in atoms if isinstance(a, Var)}


def chor_binder(ins) -> Optional[Tuple[str, str]]:
    if isinstance(ins, (Comm, CommIP)):
        return (ins.receiver, ins.var)
    if isinstance(ins, Compute):
        return (ins.proc, ins.var)
    return None


def fv(C: Chor) -> Set[Var]:
    out: Set[Var] = set()
    # walk right to left so each binder only hides its own continuation
    for ins in reversed(C):
        if isinstance(ins, Block):
            out = fv(ins.body) | out
        elif isinstance(ins, Comm):
            out = expr_vars(ins.expr) | (out - {Var(ins.var, ins.receiver)})
        elif isinstance(ins, CommIP):
            out = out - {Var(ins.var, ins.receiver)}
        elif isinstance(ins, Compute):
            out = expr_vars(ins.expr) | (out - {Var(ins.var, ins.proc)})
        elif isinstance(ins, Cond):
            out = expr_vars(ins.expr) | fv(ins.then) | fv(ins.els) | out
        elif isinstance(ins, Call):
            out = atom_vars(ins.args) | out
        elif isinstance(ins, CallIP):
            out = atom_vars(ins.args) | fv(ins.body) | out
    return out


# ---------------------------------------------------------------- block concatenation


def concat_block(B: Block, C: Chor) -> Chor:
    """``{I;C1} ⨟ C = {I;C1}; C`` and ``{0} ⨟ C = C``."""
    if not B.body:
        return tuple(C)
    return (B,) + tuple(C)


def block_then(body: Chor, C: Chor) -> Chor:
    return concat_block(Block(tuple(body)), C)


def pblock_then(body: Behavior, P: Behavior) -> Behavior:
    if not body:
        return tuple(P)
    return (PBlock(tuple(body)),) + tuple(P)


def normalize_chor(C: Chor) -> Chor:
    """Drop empty blocks and unwrap a block that ends its sequence."""
    out: List[Instr] = []
    n = len(C)
    for i, ins in enumerate(C):
        if isinstance(ins, Block):
            body = normalize_chor(ins.body)
            if not body:
                continue
            if i == n - 1:
                out.extend(body)
            else:
                out.append(Block(body))
        elif isinstance(ins, Cond):
            out.append(Cond(ins.line, ins.token, ins.expr, ins.proc,
                            normalize_chor(ins.then), normalize_chor(ins.els)))
        elif isinstance(ins, CallIP):
            out.append(CallIP(ins.line, ins.token, ins.pending, ins.proc_name, ins.roles,
                              ins.args, normalize_chor(ins.body)))
        else:
            out.append(ins)
    return tuple(out)


def normalize_proc(P: Behavior) -> Behavior:
    out: List[PInstr] = []
    n = len(P)
    for i, ins in enumerate(P):
        if isinstance(ins, PBlock):
            body = normalize_proc(ins.body)
            if not body:
                continue
            if i == n - 1:
                out.extend(body)
            else:
                out.append(PBlock(body))
        elif isinstance(ins, If):
            out.append(If(ins.expr, normalize_proc(ins.then), normalize_proc(ins.els)))
        elif isinstance(ins, Branch):
            out.append(Branch(tuple(Option(o.line, o.token, o.label, normalize_proc(o.body))
                                    for o in ins.options)))
        else:
            out.append(ins)
    return tuple(out)


def is_terminated(C: Chor) -> bool:
    return not normalize_chor(C)


# ---------------------------------------------------------------- substitution


def _rw_expr(e: Expr, roles: Mapping[str, str], env: Mapping) -> Expr:
    if isinstance(e, Var):
        k = (e.proc, e.name)
        if k in env:
            return env[k]
        return Var(e.name, roles.get(e.proc, e.proc)) if e.proc is not None else e
    if isinstance(e, Val):
        return Val(e.value, roles.get(e.proc, e.proc)) if e.proc is not None else e
    return App(e.fn, tuple(_rw_expr(a, roles, env) for a in e.args))


def _check_capture(binder, roles, env, rest, free_fn):
    """Raise if an active variable-for-variable mapping would be captured."""
    proc, name = binder
    target = Var(name, roles.get(proc, proc) if proc is not None else None)
    hit = [k for k, a in env.items() if isinstance(a, Var) and a == target]
    if not hit:
        return
    free = free_fn(rest)
    for k in hit:
        if Var(k[1], k[0]) in free:
            raise CaptureError(f"binder {target} captures the argument substituted for {k}")


def _rw_token(token, new_token):
    if new_token is not None and token is PLACEHOLDER:
        return new_token
    return token


def _rw_chor(C: Chor, roles, env, new_token) -> Chor:
    if not roles and not env and new_token is None:
        return tuple(C)
    out: List[Instr] = []
    for i, ins in enumerate(C):
        out.append(_rw_instr(ins, roles, env, new_token))
        b = chor_binder(ins)
        if b is not None:
            if b in env:
                env = {k: v for k, v in env.items() if k != b}
            if env:
                _check_capture(b, roles, env, C[i + 1:], fv)
            if not roles and not env and new_token is None:
                out.extend(C[i + 1:])
                break
    return tuple(out)


def _rw_instr(ins, roles, env, new_token):
    r = lambda p: roles.get(p, p)
    tok = _rw_token(getattr(ins, "token", None), new_token)
    if isinstance(ins, Comm):
        return Comm(ins.line, tok, r(ins.sender), _rw_expr(ins.expr, roles, env), r(ins.receiver), ins.var)
    if isinstance(ins, CommIP):
        return CommIP(ins.line, tok, r(ins.sender), r(ins.receiver), ins.var)
    if isinstance(ins, Select):
        return Select(ins.line, tok, r(ins.sender), r(ins.receiver), ins.label)
    if isinstance(ins, SelectIP):
        return SelectIP(ins.line, tok, r(ins.sender), r(ins.receiver), ins.label)
    if isinstance(ins, Compute):
        return Compute(ins.line, tok, ins.var, r(ins.proc), _rw_expr(ins.expr, roles, env))
    if isinstance(ins, Cond):
        return Cond(ins.line, tok, _rw_expr(ins.expr, roles, env), r(ins.proc),
                    _rw_chor(ins.then, roles, env, new_token), _rw_chor(ins.els, roles, env, new_token))
    if isinstance(ins, Call):
        return Call(ins.line, tok, ins.proc_name, tuple(r(p) for p in ins.roles),
                    tuple(_rw_expr(a, roles, env) for a in ins.args))
    if isinstance(ins, CallIP):
        return CallIP(ins.line, tok, tuple(r(p) for p in ins.pending), ins.proc_name,
                      tuple(r(p) for p in ins.roles), tuple(_rw_expr(a, roles, env) for a in ins.args),
                      _rw_chor(ins.body, roles, env, new_token))
    if isinstance(ins, Block):
        return Block(_rw_chor(ins.body, roles, env, new_token))
    raise TypeError(type(ins).__name__)


def substitute(C: Chor, var: Var, value) -> Chor:
    """``C[p.x ↦ v@p]``; stops at re-binders of ``p.x``."""
    return _rw_chor(C, {}, {(var.proc, var.name): Val(value, var.proc)}, None)


def substitute_many(C: Chor, env: Mapping[Var, Atom]) -> Chor:
    return _rw_chor(C, {}, {(v.proc, v.name): a for v, a in env.items()}, None)


def instantiate_procedure(decl: ProcedureDecl, roles: Tuple[str, ...], args: Tuple[Atom, ...],
                          token: Token) -> Chor:
    if len(roles) != len(decl.roles):
        raise ArityMismatch(f"{decl.name} takes {len(decl.roles)} roles, got {len(roles)}")
    if len(args) != len(decl.params):
        raise ArityMismatch(f"{decl.name} takes {len(decl.params)} arguments, got {len(args)}")
    rmap = dict(zip(decl.roles, roles))
    env = {}
    for param, arg in zip(decl.params, args):
        want = rmap.get(param.proc)
        if want is None or pn(arg) != {want}:
            raise LocationMismatch(f"argument {arg} of {decl.name} is not located at {want}")
        env[(param.proc, param.name)] = arg
    rmap = {k: v for k, v in rmap.items() if k != v}
    return _rw_chor(decl.body, rmap, env, token)


# process-side substitution


def proc_binder(ins) -> Optional[Tuple[None, str]]:
    if isinstance(ins, (Recv, SetVar)):
        return (None, ins.var)
    return None


def fv_proc(P: Behavior) -> Set[Var]:
    out: Set[Var] = set()
    for ins in reversed(P):
        if isinstance(ins, Send):
            out = expr_vars(ins.expr) | out
        elif isinstance(ins, Recv):
            out = out - {Var(ins.var)}
        elif isinstance(ins, SetVar):
            out = expr_vars(ins.expr) | (out - {Var(ins.var)})
        elif isinstance(ins, Branch):
            for o in ins.options:
                out = fv_proc(o.body) | out
        elif isinstance(ins, If):
            out = expr_vars(ins.expr) | fv_proc(ins.then) | fv_proc(ins.els) | out
        elif isinstance(ins, PCall):
            for a in ins.args:
                out = expr_vars(a) | out
        elif isinstance(ins, PBlock):
            out = fv_proc(ins.body) | out
    return out


def _rw_proc(P: Behavior, roles, env, new_token) -> Behavior:
    if not roles and not env and new_token is None:
        return tuple(P)
    out: List[PInstr] = []
    for i, ins in enumerate(P):
        out.append(_rw_pinstr(ins, roles, env, new_token))
        b = proc_binder(ins)
        if b is not None:
            if b in env:
                env = {k: v for k, v in env.items() if k != b}
            if env:
                _check_capture(b, roles, env, P[i + 1:], fv_proc)
            if not roles and not env and new_token is None:
                out.extend(P[i + 1:])
                break
    return tuple(out)


def _rw_pinstr(ins, roles, env, new_token):
    r = lambda p: roles.get(p, p)
    if isinstance(ins, Send):
        return Send(r(ins.to), ins.line, _rw_token(ins.token, new_token), _rw_expr(ins.expr, roles, env))
    if isinstance(ins, Recv):
        return Recv(ins.var, ins.line, _rw_token(ins.token, new_token),
                    r(ins.sender) if ins.sender is not None else None)
    if isinstance(ins, SetVar):
        return SetVar(ins.var, _rw_expr(ins.expr, roles, env))
    if isinstance(ins, Choose):
        return Choose(r(ins.to), ins.line, _rw_token(ins.token, new_token), ins.label)
    if isinstance(ins, Branch):
        return Branch(tuple(Option(o.line, _rw_token(o.token, new_token), o.label,
                                   _rw_proc(o.body, roles, env, new_token)) for o in ins.options))
    if isinstance(ins, If):
        return If(_rw_expr(ins.expr, roles, env), _rw_proc(ins.then, roles, env, new_token),
                  _rw_proc(ins.els, roles, env, new_token))
    if isinstance(ins, PCall):
        return PCall(ins.proc_name, tuple(r(p) for p in ins.procs),
                     tuple(_rw_expr(a, roles, env) for a in ins.args),
                     ins.line, _rw_token(ins.token, new_token))
    if isinstance(ins, PBlock):
        return PBlock(_rw_proc(ins.body, roles, env, new_token))
    raise TypeError(type(ins).__name__)


def substitute_proc(P: Behavior, var: str, value) -> Behavior:
    return _rw_proc(P, {}, {(None, var): Val(value)}, None)


def instantiate_proc_procedure(decl: ProcProcedureDecl, procs: Tuple[str, ...], args: Tuple[Expr, ...],
                               token: Token) -> Behavior:
    if len(procs) != len(decl.roles) or len(args) != len(decl.params):
        raise ArityMismatch(f"{decl.name}: expected {len(decl.roles)} processes and "
                            f"{len(decl.params)} arguments")
    rmap = {q: p for q, p in zip(decl.roles, procs) if q != p}
    env = {(None, y): a for y, a in zip(decl.params, args)}
    return _rw_proc(decl.body, rmap, env, token)


# ---------------------------------------------------------------- canonical form


def canonical(obj):
    """Stable JSON-able form of any AST node, value, token or container."""
    if obj is PLACEHOLDER:
        return "t"
    if obj is UNIT or obj is None or isinstance(obj, (bool, int, str)):
        return value_json(obj)
    if isinstance(obj, Label):
        return {"label": obj.name}
    if isinstance(obj, Val):
        return ["Val", value_json(obj.value), obj.proc]
    if is_dataclass(obj):
        return [type(obj).__name__] + [canonical(getattr(obj, f.name)) for f in fields(obj) if f.compare]
    if isinstance(obj, (tuple, list)):
        return [canonical(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted((canonical(x) for x in obj), key=lambda x: json.dumps(x, sort_keys=True))
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    raise TypeError(f"no canonical form for {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def cache_hash(cls):
    """Memoize ``hash`` on a frozen dataclass: terms are shared heavily
    between explored states and rehashing them dominates exploration."""
    base = cls.__hash__

    def __hash__(self):
        d = self.__dict__
        h = d.get("_hash")
        if h is None:
            h = d["_hash"] = base(self)
        return h

    cls.__hash__ = __hash__
    return cls


for _cls in (Label, Val, Var, App, Comm, CommIP, Select, SelectIP, Compute, Cond, Call, CallIP, Block,
             ProcedureDecl, Send, Recv, SetVar, Choose, Option, Branch, If, PCall, PBlock, ProcProcedureDecl):
    cache_hash(_cls)


__all__ = [n for n in dir() if not n.startswith("_")] + ["key_json"]
