"""Endpoint projection, merging, and the branching order ⊒."""
from __future__ import annotations

from typing import Dict, List, Mapping, Optional, Tuple

from .syntax import (
    App, Block, Branch, Call, CallIP, Choose, Comm, CommIP, Compute, Cond, If, Option, PBlock, PCall,
    ProcedureDecl, ProcProcedureDecl, Program, Recv, Select, SelectIP, Send, SetVar, Val, Var,
    normalize_proc, pblock_then, pn, stats,
)


class ProjectionError(Exception):
    def __init__(self, role, key, reason, detail=""):
        self.role = role
        self.key = key
        self.reason = reason
        super().__init__(f"cannot project {key} at {role}: {reason}{' (' + detail + ')' if detail else ''}")


class Undefined(Exception):
    """``⊔`` is undefined on the given pair."""


def mangle(name: str, role: str) -> str:
    return f"{name}__{role}"


# ---------------------------------------------------------------- atoms


class _Bottom(Exception):
    pass


def project_expr(e, r):
    if isinstance(e, Val):
        if e.proc != r:
            raise _Bottom
        return Val(e.value)
    if isinstance(e, Var):
        if e.proc != r:
            raise _Bottom
        return Var(e.name)
    return App(e.fn, tuple(project_expr(a, r) for a in e.args))


def project_args(args, r) -> tuple:
    out = []
    for a in args:
        try:
            out.append(project_expr(a, r))
        except _Bottom:
            pass
    return tuple(out)


def _expr_at(e, r, key):
    try:
        return project_expr(e, r)
    except _Bottom:
        raise ProjectionError(r, key, "ForeignAtom", "expression mentions another process")


# ---------------------------------------------------------------- merge


def _opt_order(o: Option):
    return (o.line, o.label)


def merge(P, Q):
    """Partial merge; raises Undefined when the behaviours disagree."""
    if P == Q:
        return tuple(P)
    if len(P) != len(Q):
        raise Undefined("different lengths")
    return tuple(_merge_instr(a, b) for a, b in zip(P, Q))


def _merge_instr(a, b):
    if a == b:
        return a
    if isinstance(a, Branch) and isinstance(b, Branch):
        if set(a.labels()) & set(b.labels()):
            raise Undefined("overlapping labels")
        return Branch(tuple(sorted(a.options + b.options, key=_opt_order)))
    if isinstance(a, If) and isinstance(b, If) and a.expr == b.expr:
        return If(a.expr, merge(a.then, b.then), merge(a.els, b.els))
    if isinstance(a, PBlock) and isinstance(b, PBlock):
        return PBlock(merge(a.body, b.body))
    raise Undefined(f"{type(a).__name__} vs {type(b).__name__}")


def try_merge(P, Q):
    try:
        return merge(P, Q)
    except Undefined:
        return None


# ---------------------------------------------------------------- ⊒


def branch_geq(P, Q) -> bool:
    """``P ⊒ Q``: P offers at least the branches of Q, compared after
    block normalization."""
    return _geq_seq(normalize_proc(tuple(P)), normalize_proc(tuple(Q)))


def _geq_seq(P, Q) -> bool:
    return len(P) == len(Q) and all(_geq_instr(a, b) for a, b in zip(P, Q))


def _geq_instr(a, b) -> bool:
    if a == b:
        return True
    if isinstance(a, Branch) and isinstance(b, Branch):
        mine = {(o.line, o.token, o.label): o for o in a.options}
        for o in b.options:
            m = mine.get((o.line, o.token, o.label))
            if m is None or not _geq_seq(m.body, o.body):
                return False
        return True
    if isinstance(a, If) and isinstance(b, If):
        return a.expr == b.expr and _geq_seq(a.then, b.then) and _geq_seq(a.els, b.els)
    if isinstance(a, PBlock) and isinstance(b, PBlock):
        return _geq_seq(a.body, b.body)
    return False


def network_geq(N: Mapping[str, tuple], M: Mapping[str, tuple]) -> bool:
    for p in set(N) | set(M):
        if not branch_geq(N.get(p, ()), M.get(p, ())):
            return False
    return True


# ---------------------------------------------------------------- projection


def _call_name(name, roles, r, decls):
    d = decls.get(name) if decls else None
    if d is not None and len(d.roles) == len(roles):
        return mangle(name, d.roles[roles.index(r)])
    return mangle(name, str(roles.index(r) + 1))


def project_role(C, r: str, decls: Optional[Mapping[str, ProcedureDecl]] = None) -> tuple:
    acc: tuple = ()
    for ins in reversed(tuple(C)):
        acc = _project_instr(ins, acc, r, decls)
    return acc


def _project_instr(ins, tail, r, decls):
    if isinstance(ins, Comm):
        if r == ins.sender:
            return (Send(ins.receiver, ins.line, ins.token, _expr_at(ins.expr, r, ins.key)),) + tail
        if r == ins.receiver:
            return (Recv(ins.var, ins.line, ins.token, ins.sender),) + tail
        return tail
    if isinstance(ins, CommIP):
        if r == ins.receiver:
            return (Recv(ins.var, ins.line, ins.token, ins.sender),) + tail
        return tail
    if isinstance(ins, Compute):
        if r == ins.proc:
            return (SetVar(ins.var, _expr_at(ins.expr, r, ins.key)),) + tail
        return tail
    if isinstance(ins, Select):
        if r == ins.sender:
            return (Choose(ins.receiver, ins.line, ins.token, ins.label),) + tail
        if r == ins.receiver:
            return (Branch((Option(ins.line, ins.token, ins.label, tail),)),)
        return tail
    if isinstance(ins, SelectIP):
        if r == ins.receiver:
            return (Branch((Option(ins.line, ins.token, ins.label, tail),)),)
        return tail
    if isinstance(ins, Cond):
        if r == ins.proc:
            return (If(_expr_at(ins.expr, r, ins.key), project_role(ins.then, r, decls),
                       project_role(ins.els, r, decls)),) + tail
        if r in pn(ins.then) | pn(ins.els):
            try:
                m = merge(project_role(ins.then, r, decls), project_role(ins.els, r, decls))
            except Undefined as exc:
                reason = "LabelCollision" if "labels" in str(exc) else "UnmergeableBranches"
                raise ProjectionError(r, ins.key, reason, str(exc))
            return pblock_then(m, tail)
        return tail
    if isinstance(ins, Call):
        if r in ins.roles:
            return (_pcall(ins, r, decls),) + tail
        return tail
    if isinstance(ins, CallIP):
        if r in ins.pending:
            return (_pcall(ins, r, decls),) + tail
        if r in ins.roles:
            return pblock_then(project_role(ins.body, r, decls), tail)
        return tail
    if isinstance(ins, Block):
        return pblock_then(project_role(ins.body, r, decls), tail)
    raise TypeError(type(ins).__name__)


def _pcall(ins, r, decls):
    return PCall(_call_name(ins.proc_name, ins.roles, r, decls),
                 tuple(p for p in ins.roles if p != r), project_args(ins.args, r), ins.line, ins.token)


def project_decl(d: ProcedureDecl, decls=None) -> List[ProcProcedureDecl]:
    dm = decls if decls is not None else {d.name: d}
    out = []
    for role in d.roles:
        out.append(ProcProcedureDecl(
            mangle(d.name, role), tuple(q for q in d.roles if q != role),
            tuple(v.name for v in d.params if v.proc == role),
            project_role(d.body, role, dm), d.name, role))
    return out


def project_decls(decls) -> Tuple[ProcProcedureDecl, ...]:
    dm = {d.name: d for d in decls}
    out: List[ProcProcedureDecl] = []
    for d in decls:
        out.extend(project_decl(d, dm))
    return tuple(out)


def project_chor(C, processes, decls=None) -> Dict[str, tuple]:
    return {p: project_role(C, p, decls) for p in processes}


def project_program(prog: Program):
    dm = prog.decl_map()
    return project_decls(prog.decls), project_chor(prog.main, prog.processes(), dm)


def keys_q(C, q: str) -> list:
    st = stats(C)
    return ([i.key for i in st if isinstance(i, CommIP) and i.receiver == q]
            + [i.key for i in st if isinstance(i, Comm) and i.receiver == q])


def manifest(prog: Program, name: str) -> dict:
    pdecls, net = project_program(prog)
    return {
        "schemaVersion": 1,
        "program": name,
        "processes": {p: f"{name}_{p}.proc" for p in sorted(net)},
        "procedures": [{"name": d.name, "source": d.source, "role": d.role,
                        "roles": list(d.roles), "params": list(d.params)} for d in pdecls],
    }
