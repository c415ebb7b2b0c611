#!/usr/bin/env python3
"""In-order vs out-of-order makespan, and keyed vs FIFO first consumption.

    python3 scripts/bench.py [--delays scripts/delays.json] [--sweep 0 2 5 10 20]
"""
import argparse

from o3 import corpus_text
from o3.evaluate import scenario
from o3.latency import Delays, latency_sim
from o3.parser import parse_program


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--delays", help="JSON delays applied to both experiments")
    ap.add_argument("--sweep", type=float, nargs="*", default=[0, 1, 2, 5, 10, 20],
                    help="extra latency injected on the first message")
    args = ap.parse_args()
    base = Delays.load(args.delays) if args.delays else Delays()
    prod = parse_program(corpus_text("producers"))
    stream = parse_program(corpus_text("streamit"))
    print("delay  in-order  out-of-order  | first consume: keyed  fifo")
    for x in args.sweep:
        d1 = Delays({**base.latency, "1": base.default_latency + x}, base.compute,
                    base.default_latency, base.default_compute)
        d2 = Delays({**base.latency, "1@7": base.default_latency + x}, base.compute,
                    base.default_latency, base.default_compute)
        a = latency_sim(prod, "in-order", d1, sigma=scenario("producers", prod.processes())).makespan
        b = latency_sim(prod, "out-of-order", d1, sigma=scenario("producers", prod.processes())).makespan
        sig = scenario("streamit", stream.processes())
        k = latency_sim(stream, "out-of-order", d2, "unordered", sig).first("consume")
        f = latency_sim(stream, "out-of-order", d2, "fifo", sig).first("consume")
        print(f"{x:5g}  {a:8g}  {b:12g}  |  {k:20g}  {f:4g}")


if __name__ == "__main__":
    main()
