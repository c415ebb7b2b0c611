"""Executable statements of the projection lemmas.

Each ``lemmaN`` takes a program and an RNG and returns a list of
counterexample descriptions (empty when the lemma holds on that input).
"""
from __future__ import annotations

import random
from collections import Counter
from typing import List

from .chor import apply, enabled, initial_config
from .epp import branch_geq, keys_q, project_role
from .gen import widen
from .syntax import (
    CallIP, Program, Select, SelectIP, Var, fv, fv_proc, keys_proc, pn, stats, substitute,
    substitute_proc,
)


def _walk(prog: Program, rng: random.Random, steps: int = 30):
    """The initial configuration followed by a random run prefix."""
    cfg = initial_config(prog)
    out = [cfg]
    for _ in range(steps):
        cands = enabled(cfg)
        if not cands:
            break
        cfg = apply(cfg, rng.choice(cands))
        out.append(cfg)
    return out


def _pending(C, q) -> bool:
    return any(isinstance(i, CallIP) and q in i.pending for i in stats(C))


def lemma1(prog: Program, rng: random.Random) -> List[str]:
    """``Q ⊒ ⟦C⟧_q`` implies ``keys(Q) ⊇ keys_q(C)`` as multisets.

    Checked on reachable configurations where q is not a pending role of a
    call in progress; there the statement does not hold literally (the
    call's body keys are not yet visible in q's behaviour).
    """
    bad = []
    decls = prog.decl_map()
    for cfg in _walk(prog, rng):
        for q in sorted(prog.processes()):
            if _pending(cfg.C, q):
                continue
            Q = widen(project_role(cfg.C, q, decls), rng)
            have, need = Counter(keys_proc(Q)), Counter(keys_q(cfg.C, q))
            if need - have:
                bad.append(f"{q}: missing keys {sorted((need - have).elements())}")
    return bad


def _suffixes(prog: Program, rng: random.Random):
    C = prog.main
    yield C
    if C:
        yield C[rng.randrange(len(C)):]
    for d in prog.decls:
        yield d.body


def lemma2(prog: Program, rng: random.Random) -> List[str]:
    """Projection commutes with substitution at the owner and ignores it elsewhere."""
    bad = []
    decls = prog.decl_map()
    for C in _suffixes(prog, rng):
        free = sorted(fv(C), key=lambda v: (v.proc, v.name))
        procs = sorted(pn(C)) or ["p0"]
        x = rng.choice(free) if free else Var("fresh", rng.choice(procs))
        v = rng.randrange(100)
        C2 = substitute(C, x, v)
        for r in procs:
            lhs = project_role(C2, r, decls)
            rhs = project_role(C, r, decls)
            if r == x.proc:
                rhs = substitute_proc(rhs, x.name, v)
            if lhs != rhs:
                bad.append(f"{r}: projection of {x.proc}.{x.name} := {v} differs")
    return bad


def lemma3(prog: Program, rng: random.Random) -> List[str]:
    """``P ⊒ Q`` implies ``P[x ↦ v] ⊒ Q[x ↦ v]``."""
    bad = []
    decls = prog.decl_map()
    for C in _suffixes(prog, rng):
        for r in sorted(pn(C)):
            Q = project_role(C, r, decls)
            P = widen(Q, rng)
            if not branch_geq(P, Q):
                bad.append(f"{r}: widened behaviour is not ⊒")
                continue
            free = sorted(v.name for v in fv_proc(Q)) or ["fresh"]
            x, v = rng.choice(free), rng.randrange(100)
            if not branch_geq(substitute_proc(P, x, v), substitute_proc(Q, x, v)):
                bad.append(f"{r}: ⊒ lost after substituting {x}")
    return bad


def lemma4(prog: Program, rng: random.Random) -> List[str]:
    """``⟦I; C⟧_q = ⟦I; 0⟧_q ⨟ ⟦C⟧_q`` unless I is a selection towards q."""
    bad = []
    decls = prog.decl_map()
    seqs = [cfg.C for cfg in _walk(prog, rng, 10)] + [d.body for d in prog.decls]
    for C in seqs:
        for i, ins in enumerate(C):
            for q in sorted(pn(C)):
                if isinstance(ins, (Select, SelectIP)) and ins.receiver == q:
                    continue
                whole = project_role(C[i:], q, decls)
                parts = project_role((ins,), q, decls) + project_role(C[i + 1:], q, decls)
                if whole != parts:
                    bad.append(f"{q}: sequential composition broken at {type(ins).__name__}")
    return bad


LEMMAS = {1: lemma1, 2: lemma2, 3: lemma3, 4: lemma4}
