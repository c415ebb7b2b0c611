#!/usr/bin/env python3
"""Bounded check of preservation, progress, integrity and the projection
correspondence over the shipped corpus.

    python3 scripts/run_metatheory.py --items-left 2 --reduce-above 1
"""
import argparse
import json
import time

from o3 import CORPUS, corpus_text
from o3.chor import initial_config
from o3.evaluate import scenario
from o3.parser import parse_program
from o3.verify import check_epp_correspondence, explore_chor


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--items-left", type=int, default=2, help="largest StreamIt bound")
    ap.add_argument("--reduce-above", type=int, default=1,
                    help="use the persistent-set reduction for StreamIt bounds above this")
    ap.add_argument("--skip-epp", action="store_true")
    args = ap.parse_args()
    rows = []
    for name in CORPUS:
        prog = parse_program(corpus_text(name))
        for k in (range(args.items_left + 1) if name == "streamit" else [1]):
            c0 = initial_config(prog, scenario(name, prog.processes(), k))
            reduce = name == "streamit" and k > args.reduce_above
            row = {"program": name, "itemsLeft": k, "reduced": reduce}
            for label, fn in (("chor", explore_chor), ("epp", check_epp_correspondence)):
                if label == "epp" and args.skip_epp:
                    continue
                t = time.perf_counter()
                r = fn(c0, reduce=reduce)
                row[label] = {"states": r.states, "ok": r.ok, "truncated": r.truncated,
                              "seconds": round(time.perf_counter() - t, 2)}
            rows.append(row)
            print(json.dumps(row), flush=True)
    ok = all(r[x]["ok"] and not r[x]["truncated"] for r in rows for x in ("chor", "epp") if x in r)
    print("all ok" if ok else "VIOLATIONS")
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
