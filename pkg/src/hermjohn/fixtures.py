"""Builtin domains with known answers, and self-checking reproductions.

Each fixture couples a domain with reference data (closed-form ellipsoids,
discrete certificates, volume bounds) and a provenance tag saying where the
expected number comes from:

``reference``  a closed form stated with the example itself,
``derived``    an independent computation (closed form, direct evaluation),
``trivial``    a sanity value (e.g. the ball is its own maximizer).

``run_repro`` evaluates one fixture end to end and returns a list of
:class:`Check` rows; the command line and the acceptance tests share them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .certificate import ContactMeasure, certificate_report, translate_residuals
from .containment import ContainmentConfig, inscribed, max_rho_on_ellipsoid
from .domains import DomainSpec, ball, cassini, hyperbola_box, planar_union, polydisc
from .harness import random_inscribed, uniqueness_probe
from .hermitian import Ellipsoid, ValidationError, volume
from .solver import CENTERED, TRANSLATE, SolveConfig, solve

REFERENCE, DERIVED, TRIVIAL = "reference", "derived", "trivial"

BUILTINS = ("ball", "hyperbola-box", "cassini", "disc-union", "polydisc")
REPRO_FIXTURES = ("ball", "hyperbola-box", "cassini", "disc-union")

DEFAULT_LAMBDA = 1.2
GAP_LAMBDA = 1.0005
HYPERBOLA_P = (0.6, 1.0, 1.5)


def builtin_domain(name: str, lam: float | None = None) -> DomainSpec:
    """Domain for a builtin fixture name; ``lam`` only applies to ``cassini``."""
    if name == "ball":
        return ball(n=2)
    if name == "hyperbola-box":
        return hyperbola_box(1.0, 3.0)
    if name == "cassini":
        return cassini(DEFAULT_LAMBDA if lam is None else lam)
    if name == "disc-union":
        return planar_union(DISC_UNION)
    if name == "polydisc":
        return polydisc([1.0, 2.0])
    raise ValidationError(f"unknown fixture {name!r}; expected one of {', '.join(BUILTINS)}")


# --- hyperbola box: a one-parameter family of maximizers -------------------

def hyperbola_ellipsoid(p: float) -> Ellipsoid:
    """``{p^2/2 |x|^2 + p^-2/2 |y|^2 < 1}``, of volume ``2 pi^2`` for every ``p``."""
    if p <= 0:
        raise ValidationError("p must be positive")
    return Ellipsoid.from_matrix(np.diag([p ** 2 / 2, p ** -2 / 2]))


def hyperbola_measure(p: float) -> ContactMeasure:
    """Unit weights on ``(1/p, p)`` and ``(-1/p, p)``, where ``|xy| = 1``."""
    return ContactMeasure(np.array([[1 / p, p], [-1 / p, p]], dtype=complex), [1.0, 1.0])


HYPERBOLA_VOLUME = 2 * math.pi ** 2


# --- union of two discs: translate conditions are not sufficient -----------

# (center, radius): the big disc D and the unit disc U, which touches the
# boundary of the union at +-i
DISC_UNION = ((2.0, 2.0), (0.0, 1.0))


def disc_union_ellipsoid() -> Ellipsoid:
    return Ellipsoid.ball(1, 1.0)


def disc_union_measure() -> ContactMeasure:
    return ContactMeasure(np.array([[1j], [-1j]]), [0.5, 0.5])


# --- Cassini ovaloid near lambda = 1: translated beats centered -------------

def cassini_centered_bound(lam: float) -> float:
    """Upper bound ``pi^2 (lam^2 - 1)(2 lam + 1)^2 / 2`` on centered volumes."""
    return math.pi ** 2 * (lam ** 2 - 1) * (2 * lam + 1) ** 2 / 2


CASSINI_BALL_RADIUS = 1.0 / 3.0
CASSINI_BALL_VOLUME = math.pi ** 2 / 162


def cassini_ball() -> Ellipsoid:
    """Ball of radius 1/3 about the focus ``p = (1, 0)``."""
    return Ellipsoid.ball(2, CASSINI_BALL_RADIUS, center=[1.0, 0.0])


def default_start(d: DomainSpec, mode: str, name: str | None = None, seed: int = 0,
                  cfg: ContainmentConfig = ContainmentConfig()) -> Ellipsoid:
    """Starting ellipsoid for ``solve`` when none is given."""
    if mode == TRANSLATE and name == "cassini":
        return cassini_ball()
    if mode == TRANSLATE and name == "disc-union":
        return disc_union_ellipsoid()
    return random_inscribed(d, np.random.default_rng(seed), cfg)


# --- self-checking reproductions --------------------------------------------

@dataclass
class Check:
    fixture: str
    name: str
    computed: object
    expected: str
    passed: bool
    provenance: str

    def to_json(self) -> dict:
        value = self.computed
        if isinstance(value, (np.floating, np.integer, np.bool_)):
            value = value.item()
        return {"fixture": self.fixture, "check": self.name, "computed": value,
                "expected": self.expected, "passed": bool(self.passed),
                "provenance": self.provenance}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def repro_ball(cfg: SolveConfig) -> list[Check]:
    d = builtin_domain("ball")
    rep = solve(d, Ellipsoid.ball(2, 0.5), replace(cfg, mode=CENTERED))
    err = float(np.linalg.norm(rep.ellipsoid.H - np.eye(2)))
    res = rep.certificate.matrix_residual if rep.certificate else math.inf
    return [
        Check("ball", "termination", rep.termination, "lp_optimal",
              rep.termination == "lp_optimal", TRIVIAL),
        Check("ball", "|H - Id|_F", err, "<= 1e-6", err <= 1e-6, TRIVIAL),
        Check("ball", "certificate residual", res, "<= 1e-4", res <= 1e-4, DERIVED),
    ]


def repro_hyperbola_box(cfg: SolveConfig, n_seeds: int = 16) -> list[Check]:
    d = builtin_domain("hyperbola-box")
    out = []
    for p in HYPERBOLA_P:
        E = hyperbola_ellipsoid(p)
        value, _ = max_rho_on_ellipsoid(E, d, cfg.scan_config)
        res = certificate_report(E.form, hyperbola_measure(p)).matrix_residual
        vol_err = _rel(volume(E), HYPERBOLA_VOLUME)
        out += [
            Check("hyperbola-box", f"p={p}: touches, |max rho|", abs(value), "<= 1e-6",
                  abs(value) <= 1e-6, REFERENCE),
            Check("hyperbola-box", f"p={p}: two-point certificate residual", res,
                  "<= 1e-10", res <= 1e-10, DERIVED),
            Check("hyperbola-box", f"p={p}: volume rel. error vs 2 pi^2", vol_err,
                  "<= 1e-9", vol_err <= 1e-9, REFERENCE),
        ]
    probe = uniqueness_probe(d, n_seeds, cfg, seed=cfg.seed)
    spread = max(_rel(v, HYPERBOLA_VOLUME) for v in probe.volumes)
    out += [
        Check("hyperbola-box", f"clusters over {n_seeds} seeds", probe.cluster_count, ">= 2",
              probe.cluster_count >= 2, REFERENCE),
        Check("hyperbola-box", "max volume rel. error vs 2 pi^2", spread, "<= 1e-3",
              spread <= 1e-3, REFERENCE),
    ]
    return out


def repro_cassini(cfg: SolveConfig, lam: float = GAP_LAMBDA, max_iters: int = 30) -> list[Check]:
    d = builtin_domain("cassini", lam)
    bound = cassini_centered_bound(lam)
    B = cassini_ball()
    ok, margin = inscribed(B, d, cfg.scan_config)
    rep = solve(d, B, replace(cfg, mode=TRANSLATE, max_iters=max_iters))
    low = min(rep.volumes)
    return [
        Check("cassini", f"centered bound at lambda={lam}", bound,
              f"< pi^2/162 = {CASSINI_BALL_VOLUME:.6g}", bound < CASSINI_BALL_VOLUME, REFERENCE),
        Check("cassini", "ball of radius 1/3 at p inscribed, margin", margin, "> 0",
              bool(ok and margin > 0), DERIVED),
        Check("cassini", f"translate solve ({rep.iterations} it): min volume", low,
              ">= pi^2/162", low >= CASSINI_BALL_VOLUME * (1 - 1e-12), REFERENCE),
        Check("cassini", "translate solve: final volume", rep.volume, "> centered bound",
              rep.volume > bound, DERIVED),
    ]


def repro_disc_union(cfg: SolveConfig) -> list[Check]:
    d = builtin_domain("disc-union")
    U = disc_union_ellipsoid()
    m = disc_union_measure()
    vec, mat = translate_residuals(U.form, U.center, m)
    value, _ = max_rho_on_ellipsoid(U, d, cfg.scan_config)
    big = math.pi * DISC_UNION[0][1] ** 2
    return [
        Check("disc-union", "unit disc touches, |max rho|", abs(value), "<= 1e-9",
              abs(value) <= 1e-9, DERIVED),
        Check("disc-union", "first-moment residual", vec, "<= 1e-12", vec <= 1e-12, REFERENCE),
        Check("disc-union", "second-moment residual", mat, "<= 1e-12", mat <= 1e-12, REFERENCE),
        Check("disc-union", "area of unit disc < area of D", volume(U), f"< {big:.6g}",
              volume(U) < big, REFERENCE),
    ]


def run_repro(name: str, cfg: SolveConfig = SolveConfig(), **kw) -> list[Check]:
    runners = {"ball": repro_ball, "hyperbola-box": repro_hyperbola_box,
               "cassini": repro_cassini, "disc-union": repro_disc_union}
    if name not in runners:
        raise ValidationError(f"unknown fixture {name!r}; expected one of {', '.join(runners)}")
    return runners[name](cfg, **kw)


def format_table(checks: list[Check]) -> str:
    """Fixed-width summary table, one row per check."""
    rows = [("fixture", "check", "computed", "expected", "provenance", "status")]
    for c in checks:
        v = c.computed
        shown = f"{v:.6g}" if isinstance(v, (float, np.floating)) else str(v)
        rows.append((c.fixture, c.name, shown, c.expected, c.provenance,
                     "pass" if c.passed else "FAIL"))
    widths = [max(len(r[k]) for r in rows) for k in range(len(rows[0]))]
    lines = ["  ".join(s.ljust(w) for s, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
