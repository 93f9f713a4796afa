"""End-to-end acceptance checks, one test per criterion.

Each test records a single pass/fail line (see ``conftest.record``) that is
repeated in the terminal summary.
"""
import math

import numpy as np
import pytest
from conftest import record

from hermjohn import fixtures
from hermjohn.certificate import ContactMeasure, centered_residual, certificate_report
from hermjohn.cli import main
from hermjohn.containment import ContainmentConfig, fit_scale, inscribed, max_rho_on_ellipsoid
from hermjohn.domains import (ball, cassini, hyperbola_box, levi_form, polydisc,
                              psh_sample_check, wirtinger_grad)
from hermjohn.harness import convexity_probe, random_inscribed, uniqueness_probe
from hermjohn.hermitian import Ellipsoid, HPDForm, volume
from hermjohn.solver import SolveConfig, solve

SCAN = ContainmentConfig()
TWO_PI2 = 2 * math.pi ** 2


def test_criterion_1_hyperbola_box_family():
    d = hyperbola_box(1.0, 3.0)
    rows = []
    for p in (0.6, 1.0, 1.5):
        E = fixtures.hyperbola_ellipsoid(p)
        ok, margin = inscribed(E, d, SCAN)
        res = centered_residual(E.form, fixtures.hyperbola_measure(p))
        rel = abs(volume(E) - TWO_PI2) / TWO_PI2
        rows.append((p, ok and abs(margin) <= 1e-6, res <= 1e-10, rel <= 1e-9, margin, res, rel))
    passed = all(r[1] and r[2] and r[3] for r in rows)
    record(1, "hyperbola-box family E_p", passed,
           "; ".join(f"p={r[0]}: margin={r[4]:.1e} residual={r[5]:.1e} vol_err={r[6]:.1e}"
                     for r in rows))
    assert passed


def test_criterion_2_non_uniqueness():
    rep = uniqueness_probe(hyperbola_box(1.0, 3.0), 16, SolveConfig())
    rel = np.abs(rep.volumes - TWO_PI2) / TWO_PI2
    passed = rep.cluster_count >= 2 and rel.max() <= 1e-3
    record(2, "hyperbola-box non-uniqueness", passed,
           f"{rep.cluster_count} clusters over 16 seeds, max volume rel. error {rel.max():.1e}, "
           f"terminations {sorted(set(rep.terminations))}")
    assert passed


def test_criterion_3_uniqueness_evidence():
    rb = uniqueness_probe(ball(n=2), 8, SolveConfig())
    rc = uniqueness_probe(cassini(1.2), 8, SolveConfig())
    err = float(np.linalg.norm(rb.cluster_centers()[0] - np.eye(2)))
    passed = rb.cluster_count == 1 and rc.cluster_count == 1 and err <= 1e-5
    record(3, "uniqueness on ball and Cassini(1.2)", passed,
           f"ball clusters={rb.cluster_count} |H-Id|={err:.1e}; "
           f"cassini clusters={rc.cluster_count}")
    assert passed


def _near_touching(d, rng):
    E = random_inscribed(d, rng, SCAN)
    return E.scaled(fit_scale(E, d, SCAN, lo=1.0, rtol=1e-3))


def test_criterion_4_geodesic_inscription():
    domains = [polydisc([1.0, 2.0]), hyperbola_box(1.0, 3.0), cassini(1.2)]
    worst_margin, worst_affine = math.inf, 0.0
    for k in range(20):
        d = domains[k % 3]
        rng = np.random.default_rng([4, k])
        E0, E1 = _near_touching(d, rng), _near_touching(d, rng)
        rep = convexity_probe(d, E0, E1, cfg=SCAN)
        worst_margin = min(worst_margin, rep.min_margin)
        worst_affine = max(worst_affine, rep.affinity_error)
    passed = worst_margin >= -1e-6 and worst_affine <= 1e-10
    record(4, "geodesic interpolants stay inscribed (20 pairs)", passed,
           f"min margin {worst_margin:.2e}, max log-volume affinity error {worst_affine:.1e}")
    assert passed


def test_criterion_5_certificate_equivalence():
    rng = np.random.default_rng(5)
    worst_trace, worst_mass, exact = 0.0, 0.0, 0
    for k in range(100):
        n = 1 + k % 3
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H = HPDForm(A @ A.conj().T + 0.2 * np.eye(n))
        if k % 2:
            # an exact certificate: two h-orthonormal frames mixed with weights s, 1 - s
            s = rng.uniform()
            frames = [np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))[0]
                      for _ in range(2)]
            Z = np.vstack([F.T for F in frames]) @ H.inv_sqrt().T
            m = ContactMeasure(Z, np.repeat([s, 1 - s], n))
        else:
            k_pts = int(rng.integers(1, 6))
            m = ContactMeasure(rng.normal(size=(k_pts, n)) + 1j * rng.normal(size=(k_pts, n)),
                               rng.uniform(0, 2, k_pts))
        T = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        direct = sum(w * np.vdot(z, H.matrix @ (T @ z)) for z, w in zip(m.points, m.weights))
        worst_trace = max(worst_trace, abs(direct - np.trace(T @ m.moment() @ H.matrix)))
        if centered_residual(H, m) <= 1e-10:
            exact += 1
            worst_mass = max(worst_mass, abs(m.mass - n))
    passed = worst_trace <= 1e-12 and worst_mass <= 1e-8 and exact >= 50
    record(5, "trace identity vs matrix form (100 triples)", passed,
           f"max trace gap {worst_trace:.1e}; {exact} exact certificates, "
           f"max |mass - n| {worst_mass:.1e}")
    assert passed


def test_criterion_6_disc_union(capsys):
    checks = fixtures.run_repro("disc-union")
    code = main(["repro", "disc-union"])
    out = capsys.readouterr().out
    passed = all(c.passed for c in checks) and code == 0 and "necessary-only" in out
    record(6, "disc union: translate certificate holds yet pi < 4 pi", passed,
           "; ".join(f"{c.name}={c.computed:.3g}" for c in checks) + f"; repro exit {code}")
    assert passed


def test_criterion_7_cassini_gap():
    checks = fixtures.run_repro("cassini", lam=1.0005, max_iters=30)
    passed = all(c.passed for c in checks)
    record(7, "Cassini(1.0005): centered bound < pi^2/162 <= translate volumes", passed,
           "; ".join(f"{c.name}={c.computed:.4g}" for c in checks))
    assert passed


def test_criterion_8_levi_ground_truth():
    d = cassini(1.2)
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(100):
        z = rng.uniform(-2, 2, 2) + 1j * rng.uniform(-2, 2, 2)
        x, y = z
        ax, ay = abs(x) ** 2, abs(y) ** 2
        g = np.array([2 * np.conj(x) * (ax + ay) - 2 * x, 2 * np.conj(y) * (ax + ay + 1)])
        L = np.array([[2 * (2 * ax + ay), 2 * np.conj(x) * y],
                      [2 * x * np.conj(y), 2 * (ax + 2 * ay + 1)]])
        worst = max(worst, np.abs(levi_form(d, 0, z) - L).max(),
                    np.abs(wirtinger_grad(d, 0, z) - g).max())
    ev0 = np.linalg.eigvalsh(levi_form(d, 0, np.zeros(2)))
    psh = psh_sample_check(d, count=4000).min_eigenvalue
    passed = worst <= 1e-10 and np.allclose(ev0, [0, 2], atol=1e-12) and psh >= -1e-9
    record(8, "Cassini Levi form ground truth", passed,
           f"max deviation {worst:.1e}, Levi eigenvalues at 0 {ev0.round(12).tolist()}, "
           f"min sampled eigenvalue {psh:.3g}")
    assert passed


def test_criterion_9_solver_sanity():
    rp = solve(polydisc([1.0, 2.0]), Ellipsoid.ball(2, 0.5))
    rb = solve(ball(n=2), Ellipsoid.ball(2, 0.5))
    ep = float(np.abs(rp.ellipsoid.H - np.diag([1.0, 0.25])).max())
    eb = float(np.abs(rb.ellipsoid.H - np.eye(2)).max())
    passed = (ep <= 1e-5 and eb <= 1e-6
              and rp.termination == rb.termination == "lp_optimal"
              and rp.certificate.matrix_residual <= 1e-4
              and rb.certificate.matrix_residual <= 1e-4)
    record(9, "polydisc and ball closed forms", passed,
           f"polydisc err {ep:.1e} ({rp.termination}, cert {rp.certificate.matrix_residual:.1e}); "
           f"ball err {eb:.1e} ({rb.termination}, cert {rb.certificate.matrix_residual:.1e})")
    assert passed
