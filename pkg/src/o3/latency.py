"""Discrete-event timing of a projected network.

Each process owns a clock and runs one instruction at a time.  Under the
``in-order`` policy a process may only run the head of its behaviour; under
``out-of-order`` it may run any enabled instruction.  The scheduler always
commits the candidate that completes earliest, breaking ties by key order
and then process name, so runs are deterministic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from .chor import initial_config
from .epp import project_decls
from .net import NetConfiguration, _locate, apply_net, enabled_net
from .syntax import App, If, Program, Recv, Send, SetVar
from .tokens import root_path

POLICIES = ("in-order", "out-of-order")


@dataclass
class Delays:
    latency: Dict[str, float] = field(default_factory=dict)
    compute: Dict[str, float] = field(default_factory=dict)
    default_latency: float = 1.0
    default_compute: float = 1.0

    @classmethod
    def from_json(cls, data) -> "Delays":
        if isinstance(data, str):
            data = json.loads(data)
        return cls({str(k): float(v) for k, v in data.get("latency", {}).items()},
                   {str(k): float(v) for k, v in data.get("compute", {}).items()},
                   float(data.get("default_latency", 1.0)), float(data.get("default_compute", 1.0)))

    @classmethod
    def load(cls, path) -> "Delays":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def link(self, key) -> float:
        line, tok = key
        spec = f"{line}@{'.'.join(map(str, tok))}"
        for k in (spec, str(line)):
            if k in self.latency:
                return self.latency[k]
        return self.default_latency

    def cost(self, ins) -> float:
        if isinstance(ins, SetVar) and ins.var in self.compute:
            return self.compute[ins.var]
        line = getattr(ins, "line", None)
        if line is not None and str(line) in self.compute:
            return self.compute[str(line)]
        e = getattr(ins, "expr", None)
        return self.default_compute if isinstance(e, App) else 0.0


@dataclass(frozen=True)
class Event:
    start: float
    end: float
    process: str
    rule: str
    key: Optional[tuple]
    detail: str = ""

    def to_json(self):
        return {"start": self.start, "end": self.end, "process": self.process, "rule": self.rule,
                "key": [self.key[0], list(self.key[1])] if self.key else None, "detail": self.detail}


@dataclass
class SimResult:
    makespan: float
    events: List[Event]
    terminated: bool

    def first(self, fn: str) -> Optional[float]:
        ts = [e.end for e in self.events if e.detail == fn]
        return min(ts) if ts else None

    def to_json(self):
        return {"makespan": self.makespan, "terminated": self.terminated,
                "events": [e.to_json() for e in self.events]}


def _detail(ins) -> str:
    e = getattr(ins, "expr", None)
    if isinstance(e, App):
        return e.fn
    if isinstance(ins, Recv):
        return ins.var
    return ""


def _order(cand):
    return root_path(cand.key) if cand.key is not None else ()


def latency_sim(start, policy: str = "out-of-order", delays: Optional[Delays] = None,
                transport: str = "unordered", sigma: Optional[Mapping] = None,
                bound: int = 10000) -> SimResult:
    """``start`` is a program (projected here) or a network configuration."""
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy}")
    if transport not in ("unordered", "fifo"):
        raise ValueError(f"latency_sim supports unordered and fifo, not {transport}")
    delays = delays or Delays()
    if isinstance(start, Program):
        from .verify import project_config
        c0 = initial_config(start, sigma)
        n = project_config(c0, project_decls(c0.decls), transport="unordered")
    else:
        n = start
    clock: Dict[str, float] = {p: 0.0 for p, _ in n.N}
    avail: Dict = {}       # message -> arrival time
    order: Dict = {}       # message -> send sequence number
    events: List[Event] = []
    while len(events) < bound:
        best = None
        for cand in enabled_net(n):
            if policy == "in-order" and any(cand.path):
                continue
            p = cand.actor
            ins = _locate(n.proc(p), cand.path)
            t0 = clock[p]
            if cand.message is not None:
                m = cand.message
                if transport == "fifo":
                    pending = [x for x in n.msgs(p) if x in order]
                    if min(pending, key=lambda x: order[x]) != m:
                        continue
                t0 = max(t0, avail.get(m, 0.0))
            t1 = t0 + delays.cost(ins)
            rank = (t1, _order(cand), p)
            if best is None or rank < best[0]:
                best = (rank, cand, ins, t0, t1)
        if best is None:
            break
        _, cand, ins, t0, t1 = best
        nxt = apply_net(n, cand)
        if cand.rule in ("P-Send", "P-Select"):
            m = nxt.sent[-1]
            avail[m] = t1 + delays.link(m.key)
            order[m] = len(order)
        clock[cand.actor] = t1
        events.append(Event(t0, t1, cand.actor, cand.rule, cand.key, _detail(ins)))
        n = nxt
    makespan = max([e.end for e in events], default=0.0)
    return SimResult(makespan, events, n.terminated())
