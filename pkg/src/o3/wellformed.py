"""Well-formedness of declarations, configurations and networks."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Mapping, Optional, Tuple

from .epp import branch_geq, project_role
from .syntax import (
    Block, Call, CallIP, Comm, CommIP, Compute, Cond, Label, ProcedureDecl, Select, SelectIP, Var,
    chor_binder, expr_atoms, fv, has_runtime_terms, instantiate_procedure, keys_chor, keys_proc, pn,
    stats, SyntaxFault,
)
from .tokens import PLACEHOLDER, is_concrete, key_json, next_token, root_path


@dataclass(frozen=True)
class Violation:
    rule: str
    where: str
    message: str

    def to_json(self):
        return {"rule": self.rule, "where": self.where, "message": self.message}


@dataclass
class WfReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def verdict(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.verdict

    def add(self, rule, where, message):
        self.violations.append(Violation(rule, str(where), message))

    def extend(self, other: "WfReport"):
        self.violations.extend(other.violations)
        return self

    def rules(self) -> List[str]:
        return [v.rule for v in self.violations]

    def to_json(self):
        return {"verdict": self.verdict, "violations": [v.to_json() for v in self.violations]}

    def text(self) -> str:
        if self.verdict:
            return "well-formed"
        return "\n".join(f"{v.rule} at {v.where}: {v.message}" for v in self.violations)


def _where(ins) -> str:
    k = getattr(ins, "key", None)
    if k is None:
        return "block"
    tok = "t" if k[1] is PLACEHOLDER else list(k[1])
    return f"({k[0]},{tok})"


def _dmap(decls) -> Mapping[str, ProcedureDecl]:
    if decls is None:
        return {}
    if isinstance(decls, Mapping):
        return decls
    return {d.name: d for d in decls}


# ---------------------------------------------------------------- per instruction


def _data_msgs(K, q, key):
    return [m for m in K.get(q, ()) if m.key == key and not isinstance(m.payload, Label)]


def _check_locality(ins, rep):
    if isinstance(ins, Comm):
        e, p = ins.expr, ins.sender
    elif isinstance(ins, (Compute, Cond)):
        e, p = ins.expr, ins.proc
    else:
        return
    for a in expr_atoms(e):
        if a.proc != p:
            rep.add("Lint-Locality", _where(ins), f"atom located at {a.proc}, evaluated by {p}")


def _check_call(ins, decls, rep):
    d = decls.get(ins.proc_name)
    if d is None:
        rep.add("C-WF-Call", _where(ins), f"unknown procedure {ins.proc_name}")
        return None
    if len(set(ins.roles)) != len(ins.roles):
        rep.add("C-WF-Call", _where(ins), "processes not distinct")
    if len(ins.roles) != len(d.roles) or len(ins.args) != len(d.params):
        rep.add("C-WF-Call", _where(ins), "arity mismatch")
        return None
    for param, a in zip(d.params, ins.args):
        locs = pn(a)
        for i, p in enumerate(ins.roles):
            if locs == {p} and param.proc != d.roles[i]:
                rep.add("C-WF-Call", _where(ins), f"argument at {p} fills a parameter of role {param.proc}")
        if not any(locs == {p} for p in ins.roles):
            rep.add("C-WF-Call", _where(ins), "argument located outside the call's processes")
    # variable arguments must not be captured by binders in the callee
    binders = {chor_binder(i) for i in stats(d.body)} - {None}
    for param, a in zip(d.params, ins.args):
        if isinstance(a, Var) and a.name != param.name and (param.proc, a.name) in binders:
            rep.add("Lint-Capture", _where(ins), f"argument {a.proc}.{a.name} would be captured in {d.name}")
    return d


_STATIC = (Cond, Call, CallIP, Compute)


@lru_cache(maxsize=65536)
def _check_static(ins, decls_t, in_decl) -> Tuple[Violation, ...]:
    return tuple(_check_instr(ins, {}, {d.name: d for d in decls_t}, in_decl).violations)


def check_instr(ins, K: Mapping = None, decls=None, in_decl: bool = False) -> WfReport:
    decls = _dmap(decls)
    if isinstance(ins, _STATIC):
        # these rules never look at K, and configurations share most terms
        return WfReport(list(_check_static(ins, tuple(decls.values()), in_decl)))
    return _check_instr(ins, K, decls, in_decl)


def _check_instr(ins, K: Mapping, decls, in_decl: bool) -> WfReport:
    rep = WfReport()
    K = K or {}
    if isinstance(ins, Block):
        return rep
    if not in_decl and not is_concrete(ins.token):
        rep.add("PlaceholderToken", _where(ins), "runtime instruction carries a placeholder token")
        return rep
    _check_locality(ins, rep)
    if isinstance(ins, Comm):
        if _data_msgs(K, ins.receiver, ins.key):
            rep.add("C-WF-Send", _where(ins), "a message with this key is already in flight")
    elif isinstance(ins, Select):
        if any(m.key == ins.key and m.payload == Label(ins.label) for m in K.get(ins.receiver, ())):
            rep.add("C-WF-Select", _where(ins), "this selection is already in flight")
    elif isinstance(ins, CommIP):
        n = len(_data_msgs(K, ins.receiver, ins.key))
        if n != 1:
            rep.add("C-WF-Recv", _where(ins), f"expected exactly one matching message, found {n}")
    elif isinstance(ins, SelectIP):
        if not any(m.key == ins.key and m.payload == Label(ins.label) for m in K.get(ins.receiver, ())):
            rep.add("C-WF-OnSelect", _where(ins), "selection label not in flight")
    elif isinstance(ins, Cond):
        if has_runtime_terms(ins.then) or has_runtime_terms(ins.els):
            rep.add("C-WF-If", _where(ins), "branches contain runtime terms")
    elif isinstance(ins, Call):
        _check_call(ins, decls, rep)
    elif isinstance(ins, CallIP):
        d = _check_call(ins, decls, rep)
        if not set(ins.pending) <= set(ins.roles):
            rep.add("C-WF-Calling", _where(ins), "pending roles are not call roles")
        elif d is not None and not rep.violations:
            try:
                fresh = instantiate_procedure(d, ins.roles, ins.args, next_token(ins.line, ins.token))
            except SyntaxFault as exc:
                rep.add("C-WF-Calling", _where(ins), str(exc))
                return rep
            for r in ins.pending:
                if not branch_geq(project_role(fresh, r, decls), project_role(ins.body, r, decls)):
                    rep.add("C-WF-Calling", _where(ins), f"pending role {r} no longer matches the declaration")
    return rep


# ---------------------------------------------------------------- declarations


@lru_cache(maxsize=4096)
def _check_decl_cached(decl: ProcedureDecl, decls_t: Tuple[ProcedureDecl, ...]) -> Tuple[Violation, ...]:
    rep = WfReport()
    where = decl.name
    if len(set(decl.roles)) != len(decl.roles):
        rep.add("C-WF-Def", where, "roles not distinct")
    if len(set(decl.params)) != len(decl.params):
        rep.add("C-WF-Def", where, "parameters not distinct")
    for v in decl.params:
        if v.proc not in decl.roles:
            rep.add("C-WF-Def", where, f"parameter {v.proc}.{v.name} not located at a role")
    extra = pn(decl.body) - set(decl.roles)
    if extra:
        rep.add("C-WF-Def", where, f"body mentions non-role processes {sorted(extra)}")
    if has_runtime_terms(decl.body):
        rep.add("C-WF-Def", where, "body contains runtime terms")
    ks = keys_chor(decl.body)
    if len(set(ks)) != len(ks):
        rep.add("C-WF-Def", where, "keys not distinct")
    if any(t is not PLACEHOLDER for _, t in ks):
        rep.add("C-WF-Def", where, "body keys must carry the placeholder token")
    free = fv(decl.body) - set(decl.params)
    if free:
        rep.add("C-WF-Def", where, f"free variables {sorted((v.proc, v.name) for v in free)}")
    dm = {d.name: d for d in decls_t}
    for ins in stats(decl.body):
        rep.extend(check_instr(ins, {}, dm, in_decl=True))
    return tuple(rep.violations)


def check_decl(decl: ProcedureDecl, decls=None) -> WfReport:
    dm = _dmap(decls) or {decl.name: decl}
    return WfReport(list(_check_decl_cached(decl, tuple(dm.values()))))


# ---------------------------------------------------------------- configurations


def check_chor(C, sigma_dom, K: Mapping, decls, check_decls: bool = True) -> WfReport:
    rep = WfReport()
    decls = _dmap(decls)
    procs = pn(C)
    if not procs <= set(sigma_dom):
        rep.add("C-WF", "configuration", f"processes without state: {sorted(procs - set(sigma_dom))}")
    if not procs <= set(K):
        rep.add("C-WF", "configuration", f"processes without a message set: {sorted(procs - set(K))}")
    free = fv(C)
    if free:
        rep.add("C-WF", "configuration", f"free variables {sorted((v.proc, v.name) for v in free)}")
    st = stats(C)
    ks = [i.key for i in st]
    dup = [k for k, n in Counter(ks).items() if n > 1]
    for k in dup:
        rep.add("C-WF", key_json(k) if is_concrete(k[1]) else str(k), "duplicate integrity key")
    if any(not is_concrete(t) for _, t in ks):
        rep.add("C-WF", "configuration", "placeholder token in a runtime choreography")
    else:
        _check_prefix(st, rep)
    if check_decls:
        for d in decls.values():
            rep.extend(check_decl(d, decls))
    for ins in st:
        rep.extend(check_instr(ins, K, decls))
    _check_messages(st, K, rep)
    return rep


def _check_prefix(st, rep):
    by_path = {}
    for ins in st:
        by_path.setdefault(root_path(ins.key), []).append(ins)
    inside = {}
    for ins in st:
        if isinstance(ins, CallIP):
            inside[ins.key] = {i.key for i in stats(ins.body)}
    for b in st:
        rp = root_path(b.key)
        for n in range(1, len(rp)):
            for a in by_path.get(rp[:n], ()):
                if not (isinstance(a, CallIP) and b.key in inside.get(a.key, ())):
                    rep.add("C-WF", _where(b), f"key extends {_where(a)} outside its call")


def _check_messages(st, K, rep):
    """Every undelivered message belongs to exactly one in-progress term."""
    for q, msgs in K.items():
        for m in msgs:
            if isinstance(m.payload, Label):
                n = sum(1 for i in st if isinstance(i, SelectIP) and i.receiver == q and i.key == m.key
                        and i.label == m.payload.name)
            else:
                n = sum(1 for i in st if isinstance(i, CommIP) and i.receiver == q and i.key == m.key)
            if n != 1:
                rep.add("C-WF-Messages", f"{q}:{key_json(m.key)}", f"message matched by {n} in-progress terms")


def check_config(cfg, decls=None, check_decls: bool = True) -> WfReport:
    return check_chor(cfg.C, cfg.sigma_dict(), cfg.k_dict(), decls if decls is not None else cfg.decls,
                      check_decls)


def check_network(N) -> WfReport:
    rep = WfReport()
    items = N.items() if isinstance(N, Mapping) else N
    for p, P in items:
        ks = keys_proc(P)
        for k, n in Counter(ks).items():
            if n > 1:
                rep.add("N-WF", p, f"key {k} appears {n} times")
    return rep


def check_program(prog) -> WfReport:
    from .chor import initial_config
    return check_config(initial_config(prog))
