"""Random well-formed, projectable choreographies for property tests.

Knowledge of choice is built in: every conditional opens each branch with
selections to all of its other participants.  Variable names are unique
program-wide, so substitution never captures.  Procedures only call
procedures declared before them, which rules out recursion and bounds
call depth.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional

from .syntax import (
    App, Branch, Call, Comm, Compute, Cond, Option, PBlock, ProcedureDecl, Program, Select, Val, Var,
    stats,
)
from .tokens import PLACEHOLDER


@dataclass
class GenConfig:
    max_processes: int = 6
    max_instructions: int = 12
    max_depth: int = 2         # procedure nesting
    max_roles: int = 3
    p_cond: float = 0.2
    p_call: float = 0.2


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.line = 0
        self.var = 0
        self.budget = cfg.max_instructions

    def fresh_line(self):
        self.line += 1
        return self.line

    def fresh_var(self):
        self.var += 1
        return f"v{self.var}"

    def expr(self, p, scope, depth=0):
        r = self.rng
        vs = scope.get(p, [])
        k = r.random()
        if vs and k < 0.4:
            return Var(r.choice(vs), p)
        if depth < 1 and k < 0.7:
            return App("+", (self.expr(p, scope, depth + 1), self.expr(p, scope, depth + 1)))
        return Val(r.randrange(10), p)

    def chor(self, procs, scope, token, decls, size):
        """A sequence of at most ``size`` instructions over ``procs``."""
        r = self.rng
        out = []
        scope = {p: list(v) for p, v in scope.items()}
        n = r.randint(1, max(1, size))
        while len(out) < n and self.budget > 0:
            k = r.random()
            callable_ = [d for d in decls if len(d.roles) <= len(procs)]
            if k < self.cfg.p_cond and self.budget >= 3 and len(procs) >= 1:
                out.append(self.cond(procs, scope, token, decls, size))
            elif k < self.cfg.p_cond + self.cfg.p_call and callable_:
                out.append(self.call(r.choice(callable_), procs, scope, token))
            elif len(procs) >= 2 and k < 0.75:
                p, q = r.sample(procs, 2)
                x = self.fresh_var()
                self.budget -= 1
                out.append(Comm(self.fresh_line(), token, p, self.expr(p, scope), q, x))
                scope.setdefault(q, []).append(x)
            else:
                p = r.choice(procs)
                x = self.fresh_var()
                self.budget -= 1
                out.append(Compute(self.fresh_line(), token, x, p, self.expr(p, scope)))
                scope.setdefault(p, []).append(x)
        return tuple(out)

    def cond(self, procs, scope, token, decls, size):
        r = self.rng
        p = r.choice(procs)
        others = [q for q in procs if q != p]
        cap = min(len(others), max(0, (self.budget - 1) // 2))
        part = r.sample(others, r.randint(0, cap))
        self.budget -= 1 + 2 * len(part)
        line = self.fresh_line()
        guard = App("<", (self.expr(p, scope), Val(r.randrange(10), p)))
        sub = [p] + part
        branches = []
        for label in ("THEN", "ELSE"):
            sels = []
            for q in part:
                sels.append(Select(self.fresh_line(), token, p, q, label))
            body = self.chor(sub, scope, token, decls, max(0, size // 2)) if self.budget > 0 else ()
            branches.append(tuple(sels) + body)
        return Cond(line, token, guard, p, branches[0], branches[1])

    def call(self, d, procs, scope, token):
        r = self.rng
        self.budget -= 1
        roles = tuple(r.sample(procs, len(d.roles)))
        rmap = dict(zip(d.roles, roles))
        args = []
        for prm in d.params:
            at = rmap[prm.proc]
            vs = scope.get(at, [])
            args.append(Var(r.choice(vs), at) if vs and r.random() < 0.5 else Val(r.randrange(10), at))
        return Call(self.fresh_line(), token, d.name, roles, tuple(args))


def gen_program(seed: int = 0, cfg: Optional[GenConfig] = None) -> Program:
    cfg = cfg or GenConfig()
    rng = random.Random(seed)
    g = _Gen(rng, cfg)
    g.budget -= 2          # keep room for main
    decls: List[ProcedureDecl] = []
    for i in range(rng.randint(0, cfg.max_depth)):
        if g.budget < 4:
            break
        roles = tuple(f"r{j}" for j in range(rng.randint(1, cfg.max_roles)))
        params = tuple(Var(g.fresh_var(), roles[0]) for _ in range(rng.randint(0, 1)))
        scope = {roles[0]: [v.name for v in params]}
        body = g.chor(list(roles), scope, PLACEHOLDER, tuple(decls), 3)
        decls.append(ProcedureDecl(f"P{i}", roles, params, body))
    procs = [f"p{j}" for j in range(rng.randint(2, cfg.max_processes))]
    g.budget += 2
    main = g.chor(procs, {}, (), tuple(decls), cfg.max_instructions)
    labels = frozenset(i.label for i in stats(main) if isinstance(i, Select)) | frozenset(
        i.label for d in decls for i in stats(d.body) if isinstance(i, Select))
    return Program(tuple(decls), main, labels)


def instruction_count(prog: Program) -> int:
    return len(stats(prog.main)) + sum(len(stats(d.body)) for d in prog.decls)


def widen(P, rng: random.Random, fresh=None):
    """A behaviour ``P' ⊒ P``: add options with fresh labels to branches."""
    fresh = fresh if fresh is not None else [0]
    out = []
    for ins in P:
        if isinstance(ins, Branch):
            opts = [Option(o.line, o.token, o.label, widen(o.body, rng, fresh)) for o in ins.options]
            if rng.random() < 0.5:
                fresh[0] += 1
                base = rng.choice(ins.options)
                extra = tuple(rng.sample(list(base.body), rng.randint(0, len(base.body))))
                opts.append(Option(base.line, base.token, f"X{fresh[0]}", extra))
            out.append(Branch(tuple(opts)))
        elif isinstance(ins, PBlock):
            out.append(PBlock(widen(ins.body, rng, fresh)))
        else:
            out.append(ins)
    return tuple(out)


def strategy(cfg: Optional[GenConfig] = None):
    """Hypothesis strategy over generated programs."""
    from hypothesis import strategies as st
    return st.integers(min_value=0, max_value=2**32 - 1).map(lambda s: gen_program(s, cfg))
