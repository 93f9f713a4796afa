"""Centered volume bound versus translated balls on Cassini ovaloids.

    python scripts/cassini_gap.py --lambdas 1.0005 1.001 1.01 1.05 --max-iters 20

For each lambda prints the bound ``pi^2 (lam^2 - 1)(2 lam + 1)^2 / 2`` on the
volume of centered inscribed ellipsoids, the volume ``pi^2 / 162`` of the
ball of radius 1/3 about the focus (when inscribed), and the volume reached
by a translate-mode solve started from that ball.
"""
import argparse

from hermjohn.containment import inscribed
from hermjohn.domains import cassini
from hermjohn.fixtures import CASSINI_BALL_VOLUME, cassini_ball, cassini_centered_bound
from hermjohn.solver import TRANSLATE, SolveConfig, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--lambdas", type=float, nargs="+", default=[1.0005, 1.001, 1.01, 1.05])
    ap.add_argument("--max-iters", type=int, default=20)
    args = ap.parse_args()
    print(f"{'lambda':>8} {'centered bound':>15} {'ball volume':>12} {'inscribed':>9} "
          f"{'translate':>10} {'termination':>12}")
    for lam in args.lambdas:
        d = cassini(lam)
        ok, _ = inscribed(cassini_ball(), d)
        reached, term = float("nan"), "-"
        if ok:
            rep = solve(d, cassini_ball(), SolveConfig(mode=TRANSLATE, max_iters=args.max_iters))
            reached, term = rep.volume, rep.termination
        print(f"{lam:>8.4f} {cassini_centered_bound(lam):>15.6f} {CASSINI_BALL_VOLUME:>12.6f} "
              f"{str(ok):>9} {reached:>10.6f} {term:>12}")


if __name__ == "__main__":
    main()
