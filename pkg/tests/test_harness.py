import numpy as np
import pytest
from conftest import seeds
from hypothesis import given, settings

from hermjohn.containment import ContainmentConfig, inscribed
from hermjohn.domains import ball, polydisc
from hermjohn.harness import (convexity_probe, leader_clusters, normalized_form, random_form,
                              random_inscribed, random_touching, uniqueness_probe)
from hermjohn.hermitian import Ellipsoid, ValidationError


@given(seeds)
def test_random_form_spectrum(seed):
    H = random_form(3, np.random.default_rng(seed))
    lam = np.linalg.eigvalsh(H)
    assert np.all(lam >= 0.1 - 1e-12) and np.all(lam <= 1.0 + 1e-12)
    np.testing.assert_allclose(H, H.conj().T)


@settings(max_examples=10)
@given(seeds)
def test_random_inscribed_and_touching(seed):
    d = polydisc([1.0, 2.0])
    rng = np.random.default_rng(seed)
    assert inscribed(random_inscribed(d, rng), d)[0]
    E = random_touching(d, rng)
    ok, margin = inscribed(E, d)
    assert ok and margin < 1e-6


def test_convexity_probe_on_polydisc():
    d = polydisc([1.0, 2.0])
    E0 = Ellipsoid.from_matrix(np.diag([1.0, 1.0]))      # touches |x| = 1
    E1 = Ellipsoid.from_matrix(np.diag([4.0, 0.25]))     # touches |y| = 2
    rep = convexity_probe(d, E0, E1)
    assert rep.grid[0] == 0 and rep.grid[-1] == 1 and len(rep.grid) == 11
    # diagonal forms: H_t = diag(4^t, 4^-t), so max|x|^2 = 4^-t, max|y|^2 = 4^t
    t = rep.grid
    expect = -np.maximum(4.0 ** -t - 1, 4.0 ** t - 4)
    np.testing.assert_allclose(rep.margins, expect, atol=1e-9)
    assert rep.passed() and rep.affinity_error < 1e-12
    assert rep.to_csv().splitlines()[0] == "t,margin,log_volume"


def test_convexity_probe_validation():
    d = ball(n=2)
    E = Ellipsoid.ball(2, 0.5)
    with pytest.raises(ValidationError):
        convexity_probe(d, E, E, grid=(0.5, 0.2))
    with pytest.raises(ValidationError):
        convexity_probe(d, E, Ellipsoid.ball(2, 2.0))


def test_normalized_form_and_clusters():
    F = normalized_form(np.diag([2.0, 8.0]))
    assert np.linalg.det(F) == pytest.approx(1.0)
    forms = [np.eye(2), np.eye(2) + 0.01, np.diag([2.0, 0.5]), np.eye(2) - 0.01]
    np.testing.assert_array_equal(leader_clusters(forms, 0.05), [0, 0, 1, 0])


def test_uniqueness_probe_ball_small():
    cfg_scan = ContainmentConfig(sphere_samples=1024)
    from hermjohn.solver import SolveConfig
    rep = uniqueness_probe(ball(n=2), 2, SolveConfig(containment=cfg_scan))
    assert rep.cluster_count == 1
    assert rep.terminations == ["lp_optimal", "lp_optimal"]
    np.testing.assert_allclose(rep.cluster_centers()[0], np.eye(2), atol=1e-5)
    assert rep.to_json()["cluster_count"] == 1
    with pytest.raises(ValidationError):
        uniqueness_probe(ball(n=2), 1)
