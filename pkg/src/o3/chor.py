"""Choreography configurations ⟨C, Σ, K⟩ and their labelled transitions."""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .evaluate import STANDARD, ProcState, TypeErrorAtRuntime, evaluate
from .syntax import cache_hash
from .syntax import (
    Block, Call, CallIP, Comm, CommIP, Compute, Cond, Label, ProcedureDecl, Program, Select, SelectIP,
    block_then, canonical, closed, digest, instantiate_procedure, normalize_chor, pn, substitute,
    value_json, value_tag, Var,
)
from .tokens import Key, key_json, next_token


class IllegalTransition(Exception):
    pass


class AmbiguousMessage(IllegalTransition):
    """Two undelivered messages share the key a receive is waiting on."""


@cache_hash
@dataclass(frozen=True, eq=False)
class Message:
    line: int
    token: Tuple[int, ...]
    payload: Any
    sender: Optional[str] = None

    @property
    def key(self) -> Key:
        return (self.line, self.token)

    def _k(self):
        return (self.line, self.token, value_tag(self.payload), self.sender)

    def __eq__(self, other):
        return isinstance(other, Message) and self._k() == other._k()

    def __hash__(self):
        return hash(self._k())

    def sort_key(self):
        return (self.line, self.token, self.sender or "", repr(value_tag(self.payload)))


def sorted_msgs(msgs) -> Tuple[Message, ...]:
    return tuple(sorted(msgs, key=Message.sort_key))


Pairs = Tuple[Tuple[str, Any], ...]


class _Store:
    """Shared helpers for configurations holding Σ and K as sorted pairs."""

    sigma: Pairs
    K: Pairs

    def state(self, p) -> ProcState:
        return dict(self.sigma)[p]

    def msgs(self, p) -> Tuple[Message, ...]:
        return dict(self.K).get(p, ())

    def sigma_dict(self) -> Dict[str, ProcState]:
        return dict(self.sigma)

    def k_dict(self) -> Dict[str, Tuple[Message, ...]]:
        return dict(self.K)

    def message_count(self) -> int:
        return sum(len(m) for _, m in self.K)

    def _with(self, sigma=None, K=None, **kw):
        s = dict(self.sigma)
        k = dict(self.K)
        if sigma:
            s.update(sigma)
        if K:
            k.update({p: sorted_msgs(m) for p, m in K.items()})
        return replace(self, sigma=tuple(sorted(s.items())), K=tuple(sorted(k.items())), **kw)


@cache_hash
@dataclass(frozen=True)
class ChorConfiguration(_Store):
    C: tuple
    sigma: Pairs
    K: Pairs
    decls: Tuple[ProcedureDecl, ...] = field(default=(), compare=False)
    builtins: Mapping = field(default_factory=lambda: STANDARD, compare=False, hash=False)

    def decl(self, name) -> Optional[ProcedureDecl]:
        for d in self.decls:
            if d.name == name:
                return d
        return None

    def terminated(self) -> bool:
        return not normalize_chor(self.C)

    def hash(self) -> str:
        return digest(self)


def initial_config(prog: Program, sigma: Optional[Mapping[str, ProcState]] = None,
                   builtins=None) -> ChorConfiguration:
    procs = set(pn(prog.main)) | set(sigma or {})
    s = {p: (sigma or {}).get(p, ProcState()) for p in procs}
    return ChorConfiguration(prog.main, tuple(sorted(s.items())), tuple(sorted((p, ()) for p in procs)),
                             prog.decls, STANDARD if builtins is None else builtins)


@dataclass(frozen=True)
class Candidate:
    rule: str
    actor: str
    key: Key
    path: Tuple[int, ...]
    message: Optional[Message] = None
    option: int = -1

    def describe(self) -> str:
        return f"{self.rule} by {self.actor} at {key_json(self.key)}"


# ---------------------------------------------------------------- enabled


def _matching(msgs, key, label=None):
    out = [m for m in msgs if m.key == key]
    if label is not None:
        out = [m for m in out if m.payload == Label(label)]
    else:
        out = [m for m in out if not isinstance(m.payload, Label)]
    return out


def enabled(cfg: ChorConfiguration) -> List[Candidate]:
    out: List[Candidate] = []
    _enum(cfg, cfg.C, (), frozenset(), frozenset(), out)
    return out


def _enum(cfg, C, path, blocked, excluded, out):
    for i, ins in enumerate(C):
        here = path + (i,)

        def emit(rule, actor, **kw):
            if actor not in blocked and actor not in excluded:
                out.append(Candidate(rule, actor, ins.key, here, **kw))

        if isinstance(ins, Comm):
            if closed(ins.expr):
                emit("C-Send", ins.sender)
        elif isinstance(ins, CommIP):
            ms = _matching(cfg.msgs(ins.receiver), ins.key)
            if ms:
                emit("C-Recv", ins.receiver, message=ms[0])
        elif isinstance(ins, Select):
            emit("C-Select", ins.sender)
        elif isinstance(ins, SelectIP):
            ms = _matching(cfg.msgs(ins.receiver), ins.key, ins.label)
            if ms:
                emit("C-OnSelect", ins.receiver, message=ms[0])
        elif isinstance(ins, Compute):
            if closed(ins.expr):
                emit("C-Compute", ins.proc)
        elif isinstance(ins, Cond):
            if closed(ins.expr):
                emit("C-If", ins.proc)
        elif isinstance(ins, Call):
            if cfg.decl(ins.proc_name) is not None:
                for p in ins.roles:
                    emit("C-First", p)
        elif isinstance(ins, CallIP):
            rule = "C-Last" if len(ins.pending) == 1 else "C-Enter"
            for p in ins.pending:
                emit(rule, p)
            _enum(cfg, ins.body, here, blocked, excluded | set(ins.pending), out)
        elif isinstance(ins, Block):
            _enum(cfg, ins.body, here, blocked, excluded, out)
        if isinstance(ins, (Select, SelectIP)):
            blocked = blocked | {ins.receiver}


def closed_args(args) -> bool:
    return not any(isinstance(a, Var) for a in args)


# ---------------------------------------------------------------- apply


def _rewrite(C, path, fn):
    """Replace ``C[path]; rest`` by ``fn(instr, rest)``, re-framing blocks
    with ⨟ and call bodies in place."""
    i = path[0]
    ins = C[i]
    rest = C[i + 1:]
    if len(path) == 1:
        return C[:i] + tuple(fn(ins, rest))
    if isinstance(ins, Block):
        return C[:i] + block_then(_rewrite(ins.body, path[1:], fn), rest)
    if isinstance(ins, CallIP):
        return C[:i] + (replace(ins, body=_rewrite(ins.body, path[1:], fn)),) + rest
    raise IllegalTransition(f"bad path {path}")


def _locate(C, path):
    ins = C[path[0]]
    for j in path[1:]:
        ins = ins.body[j]
    return ins


def apply(cfg: ChorConfiguration, cand: Candidate) -> ChorConfiguration:
    try:
        ins = _locate(cfg.C, cand.path)
    except (IndexError, AttributeError):
        raise IllegalTransition(f"no instruction at {cand.path}")
    if getattr(ins, "key", None) != cand.key:
        raise IllegalTransition(f"{cand.describe()}: key mismatch")
    rule = cand.rule
    p = cand.actor
    sig = {}
    K = {}

    if rule == "C-Send" and isinstance(ins, Comm) and p == ins.sender and closed(ins.expr):
        v, s = evaluate(cfg.state(p), ins.expr, cfg.builtins)
        sig[p] = s
        K[ins.receiver] = cfg.msgs(ins.receiver) + (Message(ins.line, ins.token, v, p),)
        new = CommIP(ins.line, ins.token, ins.sender, ins.receiver, ins.var)
        fn = lambda _, rest: (new,) + rest
    elif rule == "C-Recv" and isinstance(ins, CommIP) and p == ins.receiver:
        ms = _matching(cfg.msgs(p), ins.key)
        if not ms:
            raise IllegalTransition(f"{cand.describe()}: no message")
        if len(ms) > 1:
            raise AmbiguousMessage(f"{len(ms)} messages with key {key_json(ins.key)} at {p}")
        m = ms[0]
        K[p] = _remove(cfg.msgs(p), m)
        fn = lambda _, rest: substitute(rest, Var(ins.var, p), m.payload)
    elif rule == "C-Select" and isinstance(ins, Select) and p == ins.sender:
        K[ins.receiver] = cfg.msgs(ins.receiver) + (Message(ins.line, ins.token, Label(ins.label), p),)
        new = SelectIP(ins.line, ins.token, ins.sender, ins.receiver, ins.label)
        fn = lambda _, rest: (new,) + rest
    elif rule == "C-OnSelect" and isinstance(ins, SelectIP) and p == ins.receiver:
        ms = _matching(cfg.msgs(p), ins.key, ins.label)
        if not ms:
            raise IllegalTransition(f"{cand.describe()}: no label")
        K[p] = _remove(cfg.msgs(p), ms[0])
        fn = lambda _, rest: rest
    elif rule == "C-Compute" and isinstance(ins, Compute) and p == ins.proc and closed(ins.expr):
        v, s = evaluate(cfg.state(p), ins.expr, cfg.builtins)
        sig[p] = s
        fn = lambda _, rest: substitute(rest, Var(ins.var, p), v)
    elif rule == "C-If" and isinstance(ins, Cond) and p == ins.proc and closed(ins.expr):
        v, s = evaluate(cfg.state(p), ins.expr, cfg.builtins)
        if not isinstance(v, bool):
            raise TypeErrorAtRuntime(f"guard at line {ins.line} evaluated to {v!r}")
        sig[p] = s
        fn = lambda _, rest: block_then(ins.then if v else ins.els, rest)
    elif rule == "C-First" and isinstance(ins, Call) and p in ins.roles:
        d = cfg.decl(ins.proc_name)
        if d is None:
            raise IllegalTransition(f"unknown procedure {ins.proc_name}")
        body = instantiate_procedure(d, ins.roles, ins.args, next_token(ins.line, ins.token))
        pending = tuple(r for r in ins.roles if r != p)
        if pending:
            new = CallIP(ins.line, ins.token, pending, ins.proc_name, ins.roles, ins.args, body)
            fn = lambda _, rest: (new,) + rest
        else:
            # a one-role call has nobody left to enter
            fn = lambda _, rest: block_then(body, rest)
    elif rule == "C-Enter" and isinstance(ins, CallIP) and p in ins.pending and len(ins.pending) > 1:
        new = replace(ins, pending=tuple(r for r in ins.pending if r != p))
        fn = lambda _, rest: (new,) + rest
    elif rule == "C-Last" and isinstance(ins, CallIP) and ins.pending == (p,):
        fn = lambda _, rest: block_then(ins.body, rest)
    else:
        raise IllegalTransition(f"{cand.describe()} does not apply to {type(ins).__name__}")

    C2 = _rewrite(cfg.C, cand.path, fn)
    return cfg._with(sigma=sig, K=K, C=C2)


def _remove(msgs, m):
    out = list(msgs)
    out.remove(m)
    return tuple(out)


def step_message(cfg: ChorConfiguration, cand: Candidate, nxt: ChorConfiguration):
    """Payload moved by a step (sent or received), or None."""
    if cand.rule in ("C-Recv", "C-OnSelect"):
        return cand.message.payload if cand.message else None
    if cand.rule in ("C-Send", "C-Select"):
        before = {m for m in cfg.msgs(_target(cfg, cand))}
        for m in nxt.msgs(_target(cfg, cand)):
            if m not in before:
                return m.payload
    return None


def _target(cfg, cand):
    ins = _locate(cfg.C, cand.path)
    return ins.receiver


# ---------------------------------------------------------------- run


@dataclass(frozen=True)
class Step:
    step: int
    rule: str
    actor: str
    key: Key
    message: Any
    state_hash: str

    def to_json(self) -> dict:
        msg = self.message
        if isinstance(msg, Label):
            msg = msg.name
        else:
            msg = value_json(msg)
        return {"step": self.step, "rule": self.rule, "actor": self.actor,
                "key": key_json(self.key) if self.key else None, "message": msg, "stateHash": self.state_hash}


@dataclass
class Trace:
    steps: List[Step]
    final: Any
    stopped: str = "terminated"   # terminated | bound | stuck

    def __len__(self):
        return len(self.steps)


Scheduler = Union[str, Callable[[list], int], Sequence[int]]


def make_picker(scheduler: Scheduler, seed: int = 0):
    if scheduler == "in-order":
        return lambda cands: 0
    if scheduler == "random":
        rng = random.Random(seed)
        return lambda cands: rng.randrange(len(cands))
    if callable(scheduler):
        return scheduler
    choices = list(scheduler)
    it = iter(choices)
    return lambda cands: next(it)


def run(cfg: ChorConfiguration, scheduler: Scheduler = "in-order", bound: int = 200, seed: int = 0) -> Trace:
    pick = make_picker(scheduler, seed)
    steps: List[Step] = []
    while len(steps) < bound:
        cands = enabled(cfg)
        if not cands:
            return Trace(steps, cfg, "terminated" if cfg.terminated() else "stuck")
        c = cands[pick(cands)]
        nxt = apply(cfg, c)
        steps.append(Step(len(steps) + 1, c.rule, c.actor, c.key, step_message(cfg, c, nxt), nxt.hash()))
        cfg = nxt
    return Trace(steps, cfg, "terminated" if cfg.terminated() and not enabled(cfg) else "bound")
