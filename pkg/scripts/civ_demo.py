#!/usr/bin/env python3
"""Communication integrity violations with and without integrity keys."""
import json

from o3 import corpus_text
from o3.evaluate import scenario
from o3.parser import parse_program
from o3.verify import find_civ

CASES = [("forwarding", "off", ("c", "txt")), ("procx", "no-tokens", None),
         ("forwarding", "on", None), ("procx", "on", None)]

for name, mode, target in CASES:
    prog = parse_program(corpus_text(name))
    r = find_civ(prog, mode, scenario(name, prog.processes()), target=target)
    print(f"{name:<11} keys={mode:<9} ", end="")
    if r.witness is None:
        print(f"no violation in {r.states} states{' (truncated)' if r.truncated else ''}")
        continue
    print(f"violation after {len(r.witness)} steps: {json.dumps(r.detail)}")
    for s in r.witness:
        print(f"    {s.step:2d} {s.rule:<11} {s.actor:<4} {s.to_json()['key']} {s.to_json()['message']}")
