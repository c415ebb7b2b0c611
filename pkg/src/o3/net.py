"""Process networks ⟨N, Σ, K⟩ and their transitions.

``transport`` selects how receives find messages:

* ``unordered`` (default) matches the full integrity key;
* ``fifo`` additionally requires the message to be the oldest one queued
  at the receiver;
* ``no-tokens`` matches the line number only;
* ``off`` matches any data message from the expected sender.

The last two model keyless legacy runtimes and exist for CIV hunting.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

from .chor import Candidate, Message, Step, Trace, _Store, _remove, make_picker, sorted_msgs
from .evaluate import STANDARD, ProcState, TypeErrorAtRuntime, evaluate
from .syntax import cache_hash
from .syntax import (
    Branch, Choose, If, Label, PBlock, PCall, ProcProcedureDecl, Recv, Send, SetVar, closed,
    digest, instantiate_proc_procedure, normalize_proc, pblock_then, substitute_proc,
)
from .chor import IllegalTransition
from .tokens import next_token

TRANSPORTS = ("unordered", "fifo", "no-tokens", "off")


@cache_hash
@dataclass(frozen=True)
class NetConfiguration(_Store):
    N: Tuple[Tuple[str, tuple], ...]
    sigma: Tuple[Tuple[str, ProcState], ...]
    K: Tuple[Tuple[str, Tuple[Message, ...]], ...]
    decls: Tuple[ProcProcedureDecl, ...] = field(default=(), compare=False)
    builtins: Mapping = field(default_factory=lambda: STANDARD, compare=False, hash=False)
    transport: str = field(default="unordered", compare=False)
    loose: bool = field(default=False, compare=False)
    # send order, only consulted by the fifo transport
    sent: Tuple[Message, ...] = field(default=(), compare=False)

    def proc(self, p) -> tuple:
        return dict(self.N).get(p, ())

    def network(self) -> Dict[str, tuple]:
        return dict(self.N)

    def decl(self, name) -> Optional[ProcProcedureDecl]:
        for d in self.decls:
            if d.name == name:
                return d
        return None

    def terminated(self) -> bool:
        return all(not normalize_proc(P) for _, P in self.N)

    def hash(self) -> str:
        return digest(self)


def make_net(network: Mapping[str, tuple], decls, sigma: Optional[Mapping[str, ProcState]] = None,
             K: Optional[Mapping[str, tuple]] = None, builtins=None, transport="unordered",
             loose=False) -> NetConfiguration:
    if transport not in TRANSPORTS:
        raise ValueError(f"unknown transport {transport}")
    procs = set(network) | set(sigma or {}) | set(K or {})
    s = {p: (sigma or {}).get(p, ProcState()) for p in procs}
    k = {p: sorted_msgs((K or {}).get(p, ())) for p in procs}
    return NetConfiguration(tuple(sorted((p, tuple(P)) for p, P in network.items())),
                            tuple(sorted(s.items())), tuple(sorted(k.items())), tuple(decls),
                            STANDARD if builtins is None else builtins, transport, loose)


# ---------------------------------------------------------------- matching


def _recv_matches(cfg: NetConfiguration, p: str, ins: Recv) -> List[Message]:
    msgs = [m for m in cfg.msgs(p) if not isinstance(m.payload, Label)]
    t = cfg.transport
    if t in ("unordered", "fifo"):
        out = [m for m in msgs if m.key == ins.key]
    elif t == "no-tokens":
        out = [m for m in msgs if m.line == ins.line]
    else:
        out = [m for m in msgs if m.sender == ins.sender]
    if t == "fifo":
        out = [m for m in out if _is_oldest(cfg, p, m)]
    return out


def _option_matches(cfg: NetConfiguration, p: str, ins: Branch):
    out = []
    for j, o in enumerate(ins.options):
        for m in cfg.msgs(p):
            if m.key == o.key and m.payload == Label(o.label):
                if cfg.transport != "fifo" or _is_oldest(cfg, p, m):
                    out.append((j, m))
    return out


def _is_oldest(cfg: NetConfiguration, p: str, m: Message) -> bool:
    pending = list(cfg.msgs(p))
    for s in cfg.sent:
        if s in pending:
            return s == m
    return True


# ---------------------------------------------------------------- enabled


def enabled_net(cfg: NetConfiguration, only: Optional[str] = None) -> List[Candidate]:
    out: List[Candidate] = []
    for p, P in cfg.N:
        if only is None or p == only:
            _enum(cfg, p, P, (), out)
    return out


def _enum(cfg, p, P, path, out):
    for i, ins in enumerate(P):
        here = path + (i,)
        if isinstance(ins, Send):
            if closed(ins.expr):
                out.append(Candidate("P-Send", p, ins.key, here))
        elif isinstance(ins, Recv):
            seen = set()
            for m in _recv_matches(cfg, p, ins):
                if m not in seen:
                    seen.add(m)
                    out.append(Candidate("P-Recv", p, ins.key, here, message=m))
        elif isinstance(ins, SetVar):
            if closed(ins.expr):
                out.append(Candidate("P-Compute", p, None, here))
        elif isinstance(ins, Choose):
            out.append(Candidate("P-Select", p, ins.key, here))
        elif isinstance(ins, Branch):
            for j, m in _option_matches(cfg, p, ins):
                out.append(Candidate("P-OnSelect", p, ins.options[j].key, here, message=m, option=j))
            if not cfg.loose:
                return
        elif isinstance(ins, If):
            if closed(ins.expr):
                out.append(Candidate("P-If", p, None, here))
        elif isinstance(ins, PCall):
            if cfg.decl(ins.proc_name) is not None:
                out.append(Candidate("P-Call", p, ins.key, here))
        elif isinstance(ins, PBlock):
            _enum(cfg, p, ins.body, here, out)


# ---------------------------------------------------------------- apply


def _rewrite(P, path, fn):
    i = path[0]
    ins = P[i]
    rest = P[i + 1:]
    if len(path) == 1:
        return P[:i] + tuple(fn(ins, rest))
    if isinstance(ins, PBlock):
        return P[:i] + pblock_then(_rewrite(ins.body, path[1:], fn), rest)
    raise IllegalTransition(f"bad path {path}")


def _locate(P, path):
    ins = P[path[0]]
    for j in path[1:]:
        ins = ins.body[j]
    return ins


def apply_net(cfg: NetConfiguration, cand: Candidate) -> NetConfiguration:
    p = cand.actor
    P = cfg.proc(p)
    try:
        ins = _locate(P, cand.path)
    except (IndexError, AttributeError):
        raise IllegalTransition(f"no instruction at {cand.path} in {p}")
    rule = cand.rule
    sig = {}
    K = {}
    sent = cfg.sent

    if rule == "P-Send" and isinstance(ins, Send) and closed(ins.expr):
        v, s = evaluate(cfg.state(p), ins.expr, cfg.builtins)
        sig[p] = s
        m = Message(ins.line, ins.token, v, p)
        K[ins.to] = cfg.msgs(ins.to) + (m,)
        sent = sent + (m,)
        fn = lambda _, rest: rest
    elif rule == "P-Recv" and isinstance(ins, Recv):
        m = cand.message
        if m is None or m not in _recv_matches(cfg, p, ins):
            raise IllegalTransition(f"{cand.describe()}: message not available")
        K[p] = _remove(cfg.msgs(p), m)
        sent = _drop(sent, m)
        fn = lambda _, rest: substitute_proc(rest, ins.var, m.payload)
    elif rule == "P-Compute" and isinstance(ins, SetVar) and closed(ins.expr):
        v, s = evaluate(cfg.state(p), ins.expr, cfg.builtins)
        sig[p] = s
        fn = lambda _, rest: substitute_proc(rest, ins.var, v)
    elif rule == "P-Select" and isinstance(ins, Choose):
        m = Message(ins.line, ins.token, Label(ins.label), p)
        K[ins.to] = cfg.msgs(ins.to) + (m,)
        sent = sent + (m,)
        fn = lambda _, rest: rest
    elif rule == "P-OnSelect" and isinstance(ins, Branch):
        m = cand.message
        if (m is None or not (0 <= cand.option < len(ins.options))
                or (cand.option, m) not in _option_matches(cfg, p, ins)):
            raise IllegalTransition(f"{cand.describe()}: label not available")
        K[p] = _remove(cfg.msgs(p), m)
        sent = _drop(sent, m)
        body = ins.options[cand.option].body
        fn = lambda _, rest: pblock_then(body, rest)
    elif rule == "P-If" and isinstance(ins, If) and closed(ins.expr):
        v, s = evaluate(cfg.state(p), ins.expr, cfg.builtins)
        if not isinstance(v, bool):
            raise TypeErrorAtRuntime(f"guard at {p} evaluated to {v!r}")
        sig[p] = s
        fn = lambda _, rest: pblock_then(ins.then if v else ins.els, rest)
    elif rule == "P-Call" and isinstance(ins, PCall):
        d = cfg.decl(ins.proc_name)
        if d is None:
            raise IllegalTransition(f"unknown procedure {ins.proc_name}")
        body = instantiate_proc_procedure(d, ins.procs, ins.args, next_token(ins.line, ins.token))
        fn = lambda _, rest: pblock_then(body, rest)
    else:
        raise IllegalTransition(f"{cand.describe()} does not apply to {type(ins).__name__}")

    N = dict(cfg.N)
    N[p] = _rewrite(P, cand.path, fn)
    return cfg._with(sigma=sig, K=K, N=tuple(sorted(N.items())), sent=sent)


def _drop(sent, m):
    out = list(sent)
    if m in out:
        out.remove(m)
    return tuple(out)


def step_message(cfg, cand, nxt):
    if cand.rule in ("P-Recv", "P-OnSelect"):
        return cand.message.payload if cand.message else None
    if cand.rule in ("P-Send", "P-Select"):
        return nxt.sent[-1].payload if nxt.sent else None
    return None


def run_net(cfg: NetConfiguration, scheduler="random", bound: int = 200, seed: int = 0) -> Trace:
    pick = make_picker(scheduler, seed)
    steps: List[Step] = []
    while len(steps) < bound:
        cands = enabled_net(cfg)
        if not cands:
            return Trace(steps, cfg, "terminated" if cfg.terminated() else "stuck")
        c = cands[pick(cands)]
        nxt = apply_net(cfg, c)
        steps.append(Step(len(steps) + 1, c.rule, c.actor, c.key, step_message(cfg, c, nxt), nxt.hash()))
        cfg = nxt
    return Trace(steps, cfg, "terminated" if cfg.terminated() else "bound")
