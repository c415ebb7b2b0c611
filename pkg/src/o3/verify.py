"""Bounded exploration: preservation, progress and integrity on
choreographies, lock-step correspondence with the projection, and CIV
search over keyless transports."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple

from .chor import (
    ChorConfiguration, IllegalTransition, Step, apply, enabled, initial_config, step_message,
)
from .epp import branch_geq, project_chor, project_decls, project_role
from .evaluate import EvalError
from .net import NetConfiguration, apply_net, enabled_net, make_net
from .net import step_message as net_step_message
from .syntax import (
    App, Block, Call, CallIP, Comm, Compute, Cond, Program, Select, SelectIP, SyntaxFault, fv, pn,
    value_tag,
)
from .tokens import key_json
from .wellformed import check_config, check_network

CHECKS = ("preservation", "progress", "integrity", "epp")

_DELTA = {"C-Send": 1, "C-Select": 1, "C-Recv": -1, "C-OnSelect": -1}


@dataclass
class Violation:
    property: str
    message: str
    witness: List[Step] = field(default_factory=list)

    def to_json(self):
        return {"property": self.property, "message": self.message,
                "witness": [s.to_json() for s in self.witness]}


@dataclass
class ExplorationResult:
    states: int = 0
    edges: int = 0
    depth: int = 0
    truncated: bool = False
    reduced: bool = False
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self):
        return {"schemaVersion": 1, "states": self.states, "edges": self.edges, "depth": self.depth,
                "truncated": self.truncated, "reduced": self.reduced, "ok": self.ok,
                "violations": [v.to_json() for v in self.violations]}


class _Tree:
    """Parent pointers for BFS witnesses."""

    def __init__(self):
        self.parent: List[Optional[int]] = []
        self.step: List[Optional[Step]] = []
        self.depth: List[int] = []

    def add(self, parent, step) -> int:
        self.parent.append(parent)
        self.step.append(step)
        self.depth.append(0 if parent is None else self.depth[parent] + 1)
        return len(self.parent) - 1

    def path(self, i, extra=None) -> List[Step]:
        out = []
        while i is not None and self.step[i] is not None:
            out.append(self.step[i])
            i = self.parent[i]
        out.reverse()
        if extra is not None:
            out.append(extra)
        return [Step(n + 1, c.rule, c.actor, c.key, msg, nxt.hash()) for n, (c, msg, nxt) in enumerate(out)]


def _mk_step(cand, msg, nxt):
    # hashed lazily: only witness paths are ever serialized
    return (cand, msg, nxt)


# ---------------------------------------------------------------- reduction
#
# Session-level persistent sets.  Two transitions are independent when they
# have different keys (entries of different roles into one call also commute)
# and do not both run state effects that fail to commute at one process.  A
# top-level item A is a persistent choice when nothing outside it can ever
# touch it: it has no free variables, no earlier top-level selection blocks
# one of its processes, and its non-commuting effects are at processes no
# other item has effects at.  The state graph is acyclic, so exploring only
# A's transitions still reaches every terminal and every stuck configuration,
# and every receive event of the full graph occurs with the same payload.


def _effects(ins, decls, builtins, roles=None, seen=None) -> frozenset:
    """Processes at which ``ins`` may run a non-commuting effectful builtin."""
    roles = roles or {}
    seen = set() if seen is None else seen
    out = set()

    def expr(e, at):
        if isinstance(e, App):
            b = builtins.get(e.fn)
            if b is None or not (b.pure or b.commutes):
                out.add(roles.get(at, at))
            for a in e.args:
                expr(a, at)

    todo = [ins]
    while todo:
        i = todo.pop()
        if isinstance(i, Comm):
            expr(i.expr, i.sender)
        elif isinstance(i, (Compute, Cond)):
            expr(i.expr, i.proc)
            if isinstance(i, Cond):
                todo.extend(i.then + i.els)
        elif isinstance(i, Block):
            todo.extend(i.body)
        elif isinstance(i, CallIP):
            todo.extend(i.body)
        elif isinstance(i, Call):
            d = next((x for x in decls if x.name == i.proc_name), None)
            actual = tuple(roles.get(r, r) for r in i.roles)
            if d is None or (d.name, actual) in seen:
                continue
            seen.add((d.name, actual))
            for b in d.body:
                out |= _effects(b, decls, builtins, dict(zip(d.roles, actual)), seen)
    return frozenset(out)


def ample(c: ChorConfiguration, cands):
    """A persistent subset of ``cands``: the enabled transitions of the first
    independent top-level item, or all of ``cands`` when there is none."""
    items = {}
    for x in cands:
        items.setdefault(x.path[0], []).append(x)
    if len(items) < 2:
        return cands
    effs = [_effects(ins, c.decls, c.builtins) for ins in c.C]
    blocked = set()
    for i, ins in enumerate(c.C):
        if i in items and not fv((ins,)) and not (blocked & pn(ins)) and not any(
                effs[i] & e for j, e in enumerate(effs) if j != i):
            return items[i]
        if isinstance(ins, (Select, SelectIP)):
            blocked.add(ins.receiver)
    return cands


def final_states(start, reduce: bool = False, states: int = 200000) -> set:
    """Reachable configurations without enabled transitions."""
    c0 = initial_config(start) if isinstance(start, Program) else start
    seen, todo, out = {c0}, [c0], set()
    while todo:
        c = todo.pop()
        cands = enabled(c)
        if not cands:
            out.add(c)
        for x in (ample(c, cands) if reduce else cands):
            nxt = apply(c, x)
            if nxt not in seen:
                if len(seen) >= states:
                    raise RuntimeError(f"more than {states} states")
                seen.add(nxt)
                todo.append(nxt)
    return out


# ---------------------------------------------------------------- safety


def explore_chor(start, depth: int = 200, states: int = 200000, checks=CHECKS,
                 max_violations: int = 1, reduce: bool = False) -> ExplorationResult:
    """Breadth-first exploration of a program or configuration.

    ``reduce`` follows only :func:`ample` transitions; progress and the
    integrity of every receive are preserved, preservation is checked on the
    reduced states."""
    cfg = initial_config(start) if isinstance(start, Program) else start
    res = ExplorationResult(reduced=reduce)
    checks = set(checks)
    tree = _Tree()

    def fail(prop, msg, node, extra=None):
        res.violations.append(Violation(prop, msg, tree.path(node, extra)))

    # the ledger maps an in-flight key to its (receiver, payload)
    root = (cfg, ())
    rid = tree.add(None, None)
    seen = {root: rid}
    queue = deque([(root, rid)])
    if "preservation" in checks:
        rep = check_config(cfg)
        if not rep.verdict:
            fail("preservation", rep.text(), rid)
    while queue and len(res.violations) < max_violations:
        (c, ledger), nid = queue.popleft()
        d = tree.depth[nid]
        res.depth = max(res.depth, d)
        cands = enabled(c)
        if "progress" in checks and not cands and not c.terminated():
            fail("progress", "stuck configuration that is not terminated", nid)
            continue
        if d >= depth:
            if cands:
                res.truncated = True
            continue
        if "integrity" in checks:
            recv_keys = [x.key for x in cands if x.rule == "C-Recv"]
            if len(recv_keys) != len(set(recv_keys)):
                fail("integrity", "two receive transitions for one key", nid)
                continue
        led = dict(ledger)
        for cand in (ample(c, cands) if reduce else cands):
            res.edges += 1
            try:
                nxt = apply(c, cand)
            except (IllegalTransition, EvalError, SyntaxFault) as exc:
                fail("exception", f"{cand.describe()}: {exc}", nid)
                break
            msg = step_message(c, cand, nxt)
            step = _mk_step(cand, msg, nxt)
            new_led = led
            if cand.rule == "C-Send":
                if cand.key in led:
                    fail("integrity", f"key {key_json(cand.key)} sent twice", nid, step)
                new_led = dict(led)
                new_led[cand.key] = msg
            elif cand.rule == "C-Recv":
                if cand.key not in led:
                    fail("integrity", f"receive of unsent key {key_json(cand.key)}", nid, step)
                elif "integrity" in checks and not _same(led[cand.key], msg):
                    fail("integrity", f"bound {msg!r}, sent {led[cand.key]!r}", nid, step)
                new_led = {k: v for k, v in led.items() if k != cand.key}
            if "integrity" in checks:
                delta = nxt.message_count() - c.message_count()
                if delta != _DELTA.get(cand.rule, 0):
                    fail("integrity", f"{cand.rule} changed |K| by {delta}", nid, step)
            node = (nxt, tuple(sorted(new_led.items(), key=lambda kv: (kv[0][0], kv[0][1]))))
            if node in seen:
                continue
            if len(seen) >= states:
                res.truncated = True
                continue
            cid = tree.add(nid, step)
            seen[node] = cid
            if "preservation" in checks:
                rep = check_config(nxt, check_decls=False)
                if not rep.verdict:
                    fail("preservation", rep.text(), cid)
                    continue
            queue.append((node, cid))
    res.states = len(seen)
    return res


def _same(a, b) -> bool:
    return value_tag(a) == value_tag(b)


# ---------------------------------------------------------------- projection correspondence


def project_config(c: ChorConfiguration, pdecls, transport="unordered", loose=False) -> NetConfiguration:
    procs = [p for p, _ in c.sigma]
    net = project_chor(c.C, procs, {d.name: d for d in c.decls})
    return make_net(net, pdecls, c.sigma_dict(), c.k_dict(), c.builtins, transport, loose)


@lru_cache(maxsize=1 << 17)
def _proj_role(C, p, decls):
    return project_role(C, p, {d.name: d for d in decls})


@lru_cache(maxsize=1 << 17)
def _geq(P, Q) -> bool:
    return branch_geq(P, Q)


def _matches(c2: ChorConfiguration, n2: NetConfiguration) -> bool:
    """Same Σ and K, and every process offers at least its projection."""
    if c2.sigma != n2.sigma or c2.K != n2.K:
        return False
    net = dict(n2.N)
    procs = {p for p, _ in c2.sigma} | set(net)
    return all(_geq(net.get(p, ()), _proj_role(c2.C, p, c2.decls)) for p in procs)


def check_epp_correspondence(start, depth: int = 200, states: int = 200000, loose: bool = False,
                             max_violations: int = 1, reduce: bool = False) -> ExplorationResult:
    """Joint exploration of ⟨C,Σ,K⟩ and a network N ⊒ ⟦C⟧, checking both
    directions of the lock-step correspondence on every edge.

    With ``reduce`` every visited pair is still checked against all of its
    steps in both directions, but only :func:`ample` choreography steps (and
    their network mirrors) are explored further."""
    c0 = initial_config(start) if isinstance(start, Program) else start
    pdecls = project_decls(c0.decls)
    n0 = project_config(c0, pdecls, loose=loose)
    res = ExplorationResult(reduced=reduce)
    tree = _Tree()

    def fail(prop, msg, node, extra=None):
        res.violations.append(Violation(prop, msg, tree.path(node, extra)))

    rid = tree.add(None, None)
    seen = {(c0, n0): rid}
    queue = deque([((c0, n0), rid)])
    while queue and len(res.violations) < max_violations:
        (c, n), nid = queue.popleft()
        d = tree.depth[nid]
        res.depth = max(res.depth, d)
        # successors are matched when enqueued; only the root needs it here
        if nid == rid and not _matches(c, n):
            fail("epp", "network does not offer the projection's branches", nid)
            continue
        wf = check_network(n.network())
        if not wf.verdict:
            fail("epp", "network not well-formed: " + wf.text(), nid)
            continue
        ccands = enabled(c)
        ncands = enabled_net(n)
        if d >= depth:
            if ccands or ncands:
                res.truncated = True
            continue
        succ = []
        keep = set(ample(c, ccands)) if reduce else None
        try:
            csucc = [(a, apply(c, a)) for a in ccands]
            nsucc = [(b, apply_net(n, b)) for b in ncands]
        except (IllegalTransition, EvalError, SyntaxFault) as exc:
            fail("exception", str(exc), nid)
            continue
        # completeness: every choreography step is mirrored by its actor
        for a, c2 in csucc:
            res.edges += 1
            match = next((n2 for b, n2 in nsucc if b.actor == a.actor and _matches(c2, n2)), None)
            if match is None:
                fail("completeness", f"no network step mirrors {a.describe()}", nid,
                     _mk_step(a, step_message(c, a, c2), c2))
                break
            if keep is None or a in keep:
                succ.append(((c2, match), a, step_message(c, a, c2), c2))
        else:
            # soundness: every network step is explained by the choreography
            for b, n2 in nsucc:
                res.edges += 1
                match = next((c2 for a, c2 in csucc if a.actor == b.actor and _matches(c2, n2)), None)
                if match is None:
                    fail("soundness", f"no choreography step explains {b.describe()}", nid,
                         _mk_step(b, net_step_message(n, b, n2), n2))
                    break
                if keep is None:
                    succ.append(((match, n2), b, net_step_message(n, b, n2), n2))
        if res.violations:
            break
        for pair, cand, msg, after in succ:
            if pair in seen:
                continue
            if len(seen) >= states:
                res.truncated = True
                continue
            seen[pair] = tree.add(nid, _mk_step(cand, msg, after))
            queue.append((pair, seen[pair]))
    res.states = len(seen)
    return res


# ---------------------------------------------------------------- CIV search


MODES = {"on": "unordered", "off": "off", "no-tokens": "no-tokens"}


@dataclass
class CivResult:
    mode: str
    witness: Optional[List[Step]]
    states: int
    truncated: bool
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_json(self):
        return {"schemaVersion": 1, "mode": self.mode, "found": self.witness is not None,
                "states": self.states, "truncated": self.truncated, "detail": self.detail,
                "witness": [s.to_json() for s in self.witness] if self.witness is not None else None}


def find_civ(prog: Program, mode: str = "on", sigma=None, depth: int = 200,
             states: int = 200000, target: Optional[Tuple[str, str]] = None) -> CivResult:
    """Search the projected network for a receive that consumes a message
    sent under a different integrity key.  ``target=(process, variable)``
    restricts witnesses to bindings of that variable."""
    pdecls = project_decls(prog.decls)
    c0 = initial_config(prog, sigma)
    n0 = project_config(c0, pdecls, transport=MODES[mode])
    tree = _Tree()
    rid = tree.add(None, None)
    seen = {n0: rid}
    queue = deque([(n0, rid)])
    truncated = False
    while queue:
        n, nid = queue.popleft()
        cands = enabled_net(n)
        if tree.depth[nid] >= depth:
            truncated = truncated or bool(cands)
            continue
        for b in cands:
            n2 = apply_net(n, b)
            step = _mk_step(b, net_step_message(n, b, n2), n2)
            if b.rule == "P-Recv" and b.message.key != b.key and (
                    target is None or target == (b.actor, _recv_var(n, b))):
                var = _recv_var(n, b)
                return CivResult(mode, tree.path(nid, step), len(seen), truncated, {
                    "process": b.actor, "variable": var, "expectedKey": key_json(b.key),
                    "messageKey": key_json(b.message.key), "payload": b.message.payload})
            if n2 in seen:
                continue
            if len(seen) >= states:
                truncated = True
                continue
            seen[n2] = tree.add(nid, step)
            queue.append((n2, seen[n2]))
    return CivResult(mode, None, len(seen), truncated)


def _recv_var(n, cand):
    from .net import _locate
    return _locate(n.proc(cand.actor), cand.path).var
