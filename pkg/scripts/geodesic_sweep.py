"""Inscription margins along geodesics between random near-touching ellipsoids.

    python scripts/geodesic_sweep.py --pairs 30 --out out/geodesics.csv

For each pair the worst margin over ``t = 0, 0.1, ..., 1`` and the deviation of
``log volume`` from a straight line are recorded.
"""
import argparse
import csv

import numpy as np

from hermjohn.containment import ContainmentConfig, fit_scale
from hermjohn.domains import cassini, hyperbola_box, polydisc
from hermjohn.harness import convexity_probe, random_inscribed

DOMAINS = {"polydisc": polydisc([1.0, 2.0]), "hyperbola-box": hyperbola_box(1.0, 3.0),
           "cassini-1.2": cassini(1.2)}


def near_touching(d, rng, cfg):
    E = random_inscribed(d, rng, cfg)
    return E.scaled(fit_scale(E, d, cfg, lo=1.0, rtol=1e-4))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--pairs", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/geodesics.csv")
    args = ap.parse_args()
    cfg = ContainmentConfig()
    rows = []
    for k in range(args.pairs):
        name = list(DOMAINS)[k % len(DOMAINS)]
        d = DOMAINS[name]
        rng = np.random.default_rng([args.seed, k])
        rep = convexity_probe(d, near_touching(d, rng, cfg), near_touching(d, rng, cfg), cfg=cfg)
        rows.append((name, k, rep.min_margin, int(np.argmin(rep.margins)), rep.affinity_error))
        print(f"{name:<14} pair {k:>3}: min margin {rep.min_margin:.3e} "
              f"(at t={rep.grid[rows[-1][3]]:.1f}), affinity error {rep.affinity_error:.1e}")
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["domain", "pair", "min_margin", "argmin_index", "affinity_error"])
        wr.writerows(rows)
    print(f"worst margin {min(r[2] for r in rows):.3e} over {len(rows)} pairs")


if __name__ == "__main__":
    main()
