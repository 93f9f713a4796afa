"""Cluster maximizers found from random seeds on several domains.

    python scripts/nonuniqueness.py --seeds 16 --out out/nonuniqueness

Writes one JSON report per domain and prints a summary table.
"""
import argparse
import json
from pathlib import Path

from hermjohn.domains import ball, cassini, hyperbola_box
from hermjohn.harness import uniqueness_probe
from hermjohn.solver import SolveConfig

DOMAINS = {
    "ball": lambda: ball(n=2),
    "hyperbola-box": lambda: hyperbola_box(1.0, 3.0),
    "cassini-1.2": lambda: cassini(1.2),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--seeds", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--domains", nargs="+", default=list(DOMAINS), choices=list(DOMAINS))
    ap.add_argument("--out", default="out/nonuniqueness")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"{'domain':<14} {'clusters':>8} {'vol min':>14} {'vol max':>14}  terminations")
    for name in args.domains:
        rep = uniqueness_probe(DOMAINS[name](), args.seeds, SolveConfig(), seed=args.seed)
        (out / f"{name}.json").write_text(json.dumps(rep.to_json(), indent=2, sort_keys=True))
        terms = {t: rep.terminations.count(t) for t in sorted(set(rep.terminations))}
        print(f"{name:<14} {rep.cluster_count:>8} {rep.volumes.min():>14.9f} "
              f"{rep.volumes.max():>14.9f}  {terms}")


if __name__ == "__main__":
    main()
