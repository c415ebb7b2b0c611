"""``o3`` command-line entry point."""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from . import CORPUS, corpus_path
from .chor import Step, Trace, initial_config, run
from .epp import ProjectionError, manifest, project_decls, project_program
from .evaluate import EvalError, scenario, scenario_for
from .latency import Delays, latency_sim
from .net import TRANSPORTS, run_net
from .parser import ParseError, parse_program, render_proc, render_proc_decl
from .verify import CHECKS, check_epp_correspondence, explore_chor, find_civ, project_config
from .syntax import Branch, If, PBlock, PCall
from .wellformed import check_config

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

# default CIV targets for the shipped corpus
CIV_TARGETS = {"forwarding": ("c", "txt")}


@dataclass
class RunConfig:
    scenario: Optional[str] = None
    seed: int = 0
    depth: int = 200
    states: int = 200000
    schedule: str = "random"
    transport: str = "unordered"
    output: str = "text"
    items_left: int = 1

    @classmethod
    def load(cls, path) -> "RunConfig":
        """Flat ``key = value`` lines; ``#`` starts a comment."""
        cfg = cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = (s.strip() for s in line.partition("="))
            if not sep or key not in types:
                raise ValueError(f"{path}:{n}: expected one of {sorted(types)} = value")
            val = val.strip('"').strip("'")
            setattr(cfg, key, int(val) if types[key] in ("int", int) else val)
        return cfg


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    stem = p.name.split(".")[0]
    if stem in CORPUS:
        return Path(str(corpus_path(stem)))
    raise UsageError(f"no such file: {path}")


def _load(args):
    path = _resolve(args.file)
    prog = parse_program(path.read_text(encoding="utf-8"))
    cfg = args.run_config
    name = cfg.scenario or scenario_for(path)
    sigma = scenario(name, prog.processes(), cfg.items_left)
    return path, prog, sigma


def emit_trace_json(trace) -> str:
    steps = trace.steps if isinstance(trace, Trace) else trace
    lines = [json.dumps({"schemaVersion": 1})]
    lines += [json.dumps(s.to_json()) for s in steps]
    return "\n".join(lines) + "\n"


def _print_trace(trace: Trace, as_json: bool):
    if as_json:
        sys.stdout.write(emit_trace_json(trace))
        return
    for s in trace.steps:
        key = "-" if s.key is None else f"({s.key[0]},{list(s.key[1])})"
        msg = "" if s.message is None else f"  {s.to_json()['message']}"
        print(f"{s.step:4d}  {s.rule:<11} {s.actor:<8} {key}{msg}")
    print(f"{trace.stopped} after {len(trace.steps)} steps")


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True, default=str))


# ---------------------------------------------------------------- subcommands


def cmd_check(args) -> int:
    _, prog, sigma = _load(args)
    rep = check_config(initial_config(prog, sigma))
    if args.run_config.output == "json":
        _dump({"schemaVersion": 1, **rep.to_json()})
    else:
        print(rep.text())
    return EXIT_OK if rep.verdict else EXIT_VIOLATION


def cmd_project(args) -> int:
    path, prog, _ = _load(args)
    try:
        pdecls, net = project_program(prog)
    except ProjectionError as exc:
        print(f"projection failed: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    name = path.name.split(".")[0]
    texts = {}
    for p in sorted(net):
        body = "\n".join(render_proc_decl(d) for d in _reachable(net[p], pdecls))
        texts[p] = (body + "\n\n" if body else "") + f"main {{\n{render_proc(net[p], 1)}\n}}\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        man = manifest(prog, name)
        for p, text in texts.items():
            (out / man["processes"][p]).write_text(text)
        (out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
        print(f"wrote {len(texts)} process files to {out}")
    else:
        for p, text in texts.items():
            print(f"// process {p}\n{text}")
    return EXIT_OK


def _reachable(P, pdecls):
    """Projected procedures a behaviour may call, in declaration order."""
    by_name = {d.name: d for d in pdecls}
    seen, todo = set(), [P]
    while todo:
        for ins in _pstats(todo.pop()):
            if isinstance(ins, PCall) and ins.proc_name not in seen and ins.proc_name in by_name:
                seen.add(ins.proc_name)
                todo.append(by_name[ins.proc_name].body)
    return [d for d in pdecls if d.name in seen]


def _pstats(P):
    for ins in P:
        yield ins
        if isinstance(ins, (PBlock,)):
            yield from _pstats(ins.body)
        elif isinstance(ins, If):
            yield from _pstats(ins.then)
            yield from _pstats(ins.els)
        elif isinstance(ins, Branch):
            for o in ins.options:
                yield from _pstats(o.body)


def cmd_run(args) -> int:
    _, prog, sigma = _load(args)
    cfg = args.run_config
    trace = run(initial_config(prog, sigma), cfg.schedule, args.bound, cfg.seed)
    _print_trace(trace, cfg.output == "json")
    return EXIT_VIOLATION if trace.stopped == "stuck" else EXIT_OK


def cmd_simulate(args) -> int:
    _, prog, sigma = _load(args)
    cfg = args.run_config
    c0 = initial_config(prog, sigma)
    net = project_config(c0, project_decls(c0.decls), transport=cfg.transport, loose=args.loose_delay)
    trace = run_net(net, cfg.schedule, args.bound, cfg.seed)
    _print_trace(trace, cfg.output == "json")
    return EXIT_VIOLATION if trace.stopped == "stuck" else EXIT_OK


def cmd_verify(args) -> int:
    _, prog, sigma = _load(args)
    cfg = args.run_config
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise UsageError(f"unknown checks {bad}; choose from {','.join(CHECKS)}")
    c0 = initial_config(prog, sigma)
    report = {"schemaVersion": 1, "checks": checks, "depth": cfg.depth, "states": cfg.states,
              "reduced": args.reduce}
    ok = True
    chor_checks = [c for c in checks if c != "epp"]
    if chor_checks:
        r = explore_chor(c0, cfg.depth, cfg.states, chor_checks, reduce=args.reduce)
        report["chor"] = r.to_json()
        ok = ok and r.ok
    if "epp" in checks:
        r = check_epp_correspondence(c0, cfg.depth, cfg.states, reduce=args.reduce)
        report["epp"] = r.to_json()
        ok = ok and r.ok
    report["ok"] = ok
    _dump(report)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_civ(args) -> int:
    path, prog, sigma = _load(args)
    cfg = args.run_config
    target = None
    if args.target:
        p, _, x = args.target.partition(".")
        target = (p, x)
    elif args.keys == "off":
        target = CIV_TARGETS.get(path.name.split(".")[0])
    res = find_civ(prog, args.keys, sigma, cfg.depth, cfg.states, target)
    _dump(res.to_json())
    return EXIT_VIOLATION if res.witness is not None else EXIT_OK


def cmd_bench(args) -> int:
    _, prog, sigma = _load(args)
    cfg = args.run_config
    delays = Delays.load(args.delays) if args.delays else Delays()
    transport = cfg.transport if cfg.transport in ("unordered", "fifo") else "unordered"
    out = {"schemaVersion": 1, "transport": transport, "policies": {}}
    for policy in ("in-order", "out-of-order"):
        r = latency_sim(prog, policy, delays, transport, sigma)
        out["policies"][policy] = {"makespan": r.makespan, "terminated": r.terminated,
                                   "firstConsume": r.first("consume"), "events": len(r.events)}
    _dump(out)
    return EXIT_OK


# ---------------------------------------------------------------- argv


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="o3", description="Out-of-order choreographies.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", help="a .chor file, or the name of a shipped example")
        p.add_argument("--config", help="flat key = value file with RunConfig fields")
        p.add_argument("--scenario", choices=("buyitem", "streamit", "forwarding", "producers", "procx",
                                              "default"))
        p.add_argument("--items-left", type=int, dest="items_left")
        p.add_argument("--seed", type=int)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(fn=fn)
        return p

    common("check", cmd_check, "well-formedness report")
    p = common("project", cmd_project, "endpoint projection")
    p.add_argument("-o", "--out", help="directory for <Program>_<role>.proc files and manifest.json")
    for name, fn in (("run", cmd_run), ("simulate", cmd_simulate)):
        p = common(name, fn, f"{name} one execution")
        p.add_argument("--schedule", choices=("in-order", "random"))
        p.add_argument("--bound", type=int, default=200)
        if name == "simulate":
            p.add_argument("--net", choices=TRANSPORTS, dest="transport")
            p.add_argument("--loose-delay", action="store_true")
    p = common("verify", cmd_verify, "bounded exploration of the metatheory")
    p.add_argument("--depth", type=int)
    p.add_argument("--states", type=int)
    p.add_argument("--checks", default=",".join(CHECKS))
    p.add_argument("--reduce", action="store_true", help="session-level partial-order reduction")
    p = common("civ-demo", cmd_civ, "search for communication integrity violations")
    p.add_argument("--keys", choices=("off", "on", "no-tokens"), default="on")
    p.add_argument("--target", help="only report bindings of PROC.VAR")
    p.add_argument("--depth", type=int)
    p.add_argument("--states", type=int)
    p = common("bench", cmd_bench, "in-order vs out-of-order latency")
    p.add_argument("--delays", help="JSON with latency/compute maps and defaults")
    p.add_argument("--net", choices=("unordered", "fifo"), dest="transport")
    return ap


def _run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if "O3_SEED" in os.environ:
        cfg.seed = int(os.environ["O3_SEED"])
    for f in ("scenario", "seed", "depth", "states", "schedule", "transport", "items_left"):
        v = getattr(args, f, None)
        if v is not None:
            setattr(cfg, f, v)
    if args.json:
        cfg.output = "json"
    return cfg


def main(argv: Optional[List[str]] = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        args.run_config = _run_config(args)
        return args.fn(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"o3: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"o3: parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EvalError as exc:
        print(f"o3: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
