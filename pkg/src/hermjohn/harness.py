"""Property probes: inscription along geodesics and (non-)uniqueness of maximizers.

``convexity_probe`` evaluates the inscription margin of the geodesic
interpolants between two inscribed centered ellipsoids; for pseudoconvex
domains every interpolant is expected to stay inscribed.
``uniqueness_probe`` runs the centered solver from several random inscribed
seeds and clusters the resulting forms after normalizing them to unit
determinant.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import unitary_group

from .containment import ContainmentConfig, fit_scale, inscribed, max_rho_on_ellipsoid
from .domains import DomainSpec
from .hermitian import Ellipsoid, HPDForm, ValidationError, complex_to_json, geodesic_point, log_volume
from .solver import CENTERED, SolveConfig, SolveReport, solve

DEFAULT_GRID = tuple(np.round(np.arange(1, 10) / 10, 10))
CLUSTER_THRESHOLD = 0.05


@dataclass
class ConvexityReport:
    grid: np.ndarray
    margins: np.ndarray
    log_volumes: np.ndarray
    witness: np.ndarray | None = None    # boundary point of the worst interpolant

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())

    @property
    def affinity_error(self) -> float:
        """Deviation of the log volume from the chord between the endpoints."""
        t, v = self.grid, self.log_volumes
        return float(np.max(np.abs(v - ((1 - t) * v[0] + t * v[-1]))))

    def passed(self, tol: float = 1e-6) -> bool:
        return self.min_margin >= -tol

    def to_json(self) -> dict:
        return {"grid": self.grid.tolist(), "margins": self.margins.tolist(),
                "log_volumes": self.log_volumes.tolist(), "min_margin": self.min_margin,
                "affinity_error": self.affinity_error,
                "witness": None if self.witness is None else complex_to_json(self.witness)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "margin", "log_volume"])
        for row in zip(self.grid, self.margins, self.log_volumes):
            wr.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def convexity_probe(d: DomainSpec, E0: Ellipsoid, E1: Ellipsoid, grid=DEFAULT_GRID,
                    cfg: ContainmentConfig = ContainmentConfig()) -> ConvexityReport:
    """Inscription margins of ``geodesic_point(E0, E1, t)`` for ``t`` in ``grid``.

    The endpoints are always evaluated and included in the report, so the
    returned grid is ``[0, *grid, 1]``.  Raises if an endpoint is not
    inscribed.
    """
    g = np.asarray(grid, dtype=float)
    if g.size and (np.any(np.diff(g) <= 0) or g[0] <= 0 or g[-1] >= 1):
        raise ValidationError("grid must be strictly increasing inside (0, 1)")
    for name, E in (("E0", E0), ("E1", E1)):
        ok, margin = inscribed(E, d, cfg)
        if not ok:
            raise ValidationError(f"endpoint {name} is not inscribed (margin {margin:.3e})")
    ts = np.concatenate([[0.0], g, [1.0]])
    margins, logv, worst = [], [], (np.inf, None)
    for t in ts:
        Et = geodesic_point(E0, E1, float(t))
        value, z = max_rho_on_ellipsoid(Et, d, cfg)
        margins.append(-value)
        logv.append(log_volume(Et))
        if -value < worst[0]:
            worst = (-value, z)
    return ConvexityReport(ts, np.array(margins), np.array(logv), worst[1])


def random_form(n: int, rng: np.random.Generator, lo: float = 0.1, hi: float = 1.0) -> np.ndarray:
    """HPD matrix with log-uniform eigenvalues in ``[lo, hi]`` and a random eigenbasis."""
    lam = np.exp(rng.uniform(np.log(lo), np.log(hi), n))
    U = unitary_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
    H = (U * lam) @ U.conj().T
    return 0.5 * (H + H.conj().T)


def random_inscribed(d: DomainSpec, rng: np.random.Generator,
                     cfg: ContainmentConfig = ContainmentConfig(),
                     max_halvings: int = 60) -> Ellipsoid:
    """Random centered ellipsoid, halved about 0 until it is inscribed."""
    E = Ellipsoid.from_matrix(random_form(d.n, rng))
    for _ in range(max_halvings):
        if inscribed(E, d, cfg)[0]:
            return E
        E = E.scaled(0.5)
    raise ValidationError("no inscribed dilation found; is 0 inside the domain?")


def random_touching(d: DomainSpec, rng: np.random.Generator,
                    cfg: ContainmentConfig = ContainmentConfig()) -> Ellipsoid:
    """Random centered ellipsoid dilated until it (nearly) touches the boundary."""
    E = random_inscribed(d, rng, cfg)
    s = fit_scale(E, d, cfg, lo=1.0, rtol=1e-8)
    return E.scaled(s)


def normalized_form(H) -> np.ndarray:
    return HPDForm(np.asarray(H, dtype=complex)).normalized()


def leader_clusters(forms: list, threshold: float = CLUSTER_THRESHOLD) -> np.ndarray:
    """Cluster labels: each form joins the first leader within ``threshold``."""
    leaders: list[np.ndarray] = []
    labels = []
    for F in forms:
        for k, L in enumerate(leaders):
            if np.linalg.norm(F - L) < threshold:
                labels.append(k)
                break
        else:
            leaders.append(F)
            labels.append(len(leaders) - 1)
    return np.array(labels, dtype=int)


@dataclass
class UniquenessReport:
    ellipsoids: list
    volumes: np.ndarray
    terminations: list
    distances: np.ndarray          # pairwise Frobenius distances of normalized forms
    labels: np.ndarray
    threshold: float = CLUSTER_THRESHOLD
    reports: list = field(default_factory=list, repr=False)

    @property
    def cluster_count(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def volume_spread(self) -> float:
        return float(self.volumes.max() - self.volumes.min())

    def cluster_centers(self) -> list:
        """Mean raw form matrix per cluster."""
        return [np.mean([E.H for E, l in zip(self.ellipsoids, self.labels) if l == k], axis=0)
                for k in range(self.cluster_count)]

    def to_json(self) -> dict:
        return {"threshold": self.threshold, "cluster_count": self.cluster_count,
                "labels": self.labels.tolist(), "volumes": self.volumes.tolist(),
                "volume_spread": self.volume_spread, "terminations": self.terminations,
                "distances": self.distances.tolist(),
                "ellipsoids": [E.to_json() for E in self.ellipsoids]}


def uniqueness_probe(d: DomainSpec, n_seeds: int, cfg: SolveConfig = SolveConfig(),
                     seed: int = 0, threshold: float = CLUSTER_THRESHOLD) -> UniquenessReport:
    """Centered solves from ``n_seeds`` random inscribed seeds, clustered.

    Seed ``k`` draws its starting ellipsoid from ``default_rng([seed, k])``,
    so runs are reproducible and independent of each other.
    """
    if n_seeds < 2:
        raise ValidationError("n_seeds must be >= 2")
    cfg = replace(cfg, mode=CENTERED)
    reports: list[SolveReport] = []
    for k in range(n_seeds):
        rng = np.random.default_rng([seed, k])
        E0 = random_inscribed(d, rng, cfg.scan_config)
        reports.append(solve(d, E0, cfg))
    Es = [r.ellipsoid for r in reports]
    forms = [normalized_form(E.H) for E in Es]
    D = np.array([[np.linalg.norm(F - G) for G in forms] for F in forms])
    return UniquenessReport(Es, np.array([r.volume for r in reports]),
                            [r.termination for r in reports], D,
                            leader_clusters(forms, threshold), threshold, reports)
