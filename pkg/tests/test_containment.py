import numpy as np
import pytest
from conftest import random_hpd, seeds
from hypothesis import given
from hypothesis import strategies as st

from hermjohn.certificate import fit_measure
from hermjohn.containment import (ContainmentConfig, boundary_point, contact_points, fit_scale,
                                  inscribed, max_rho_on_ellipsoid, scan, sphere_points)
from hermjohn.domains import ball, hyperbola_box, planar_union, polydisc
from hermjohn.hermitian import Ellipsoid, ValidationError

CFG = ContainmentConfig()


def polydisc_max_rho(H, radii):
    """Over ``{z* H z = 1}`` the maximum of ``|z_k|^2`` is ``(H^{-1})_kk``."""
    return float(np.max(np.diag(np.linalg.inv(H)).real - np.asarray(radii) ** 2))


def hyperbola_max_rho(a, b, P=1.0, B=3.0):
    """``{a|x|^2 + b|y|^2 = 1}``: max |x| = a^-1/2, max |y| = b^-1/2, max |xy| = (4ab)^-1/2."""
    return max(1 / np.sqrt(4 * a * b) - P, 1 / np.sqrt(a) - B, 1 / np.sqrt(b) - B)


def test_sphere_points_are_unit_and_deterministic():
    W = sphere_points(2, 512, seed=3)
    np.testing.assert_allclose(np.linalg.norm(W, axis=1), 1.0, atol=1e-14)
    np.testing.assert_array_equal(W, sphere_points(2, 512, seed=3))
    assert not np.array_equal(W, sphere_points(2, 512, seed=4))
    # balanced: E[w] = 0 and E[w w*] = Id / n
    assert np.abs(W.mean(axis=0)).max() < 0.05
    np.testing.assert_allclose(W.T @ W.conj() / 512, np.eye(2) / 2, atol=0.05)


def test_boundary_point_lies_on_ellipsoid():
    E = Ellipsoid.from_matrix(random_hpd(np.random.default_rng(0), 2), center=[1j, 0.5])
    for w in sphere_points(2, 16):
        assert E.residual(boundary_point(E, w))[0] == pytest.approx(0.0, abs=1e-13)


@given(seeds)
def test_polydisc_max_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    H = random_hpd(rng, 2, lo=0.3, hi=4.0)
    value, z = max_rho_on_ellipsoid(Ellipsoid.from_matrix(H), polydisc([1.0, 2.0]), CFG)
    assert value == pytest.approx(polydisc_max_rho(H, [1.0, 2.0]), abs=1e-9)
    assert Ellipsoid.from_matrix(H).residual(z)[0] == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-2.5, 1.5), st.floats(-2.5, 1.5), st.floats(0, 2 * np.pi))
def test_hyperbola_box_max_matches_closed_form(la, lb, phase):
    a, b = np.exp(la), np.exp(lb)
    # a diagonal unitary conjugation leaves all three moduli unchanged
    U = np.diag([1.0, np.exp(1j * phase)])
    H = U @ np.diag([a, b]) @ U.conj().T
    value, _ = max_rho_on_ellipsoid(Ellipsoid.from_matrix(H), hyperbola_box(), CFG)
    assert value == pytest.approx(hyperbola_max_rho(a, b), abs=1e-9)


@given(seeds)
def test_ball_max_matches_top_eigenvalue(seed):
    H = random_hpd(np.random.default_rng(seed), 3, lo=0.5, hi=5.0)
    value, _ = max_rho_on_ellipsoid(Ellipsoid.from_matrix(H), ball(n=3), CFG)
    assert value == pytest.approx(1 / np.linalg.eigvalsh(H)[0] - 1, abs=1e-9)


def test_inscribed_and_margin():
    d = polydisc([1.0, 2.0])
    ok, margin = inscribed(Ellipsoid.from_matrix(np.diag([4.0, 1.0])), d)
    assert ok and margin == pytest.approx(0.75)
    ok, margin = inscribed(Ellipsoid.from_matrix(np.diag([0.5, 1.0])), d)
    assert not ok and margin == pytest.approx(-1.0)


@given(seeds)
def test_fit_scale_matches_closed_form(seed):
    H = random_hpd(np.random.default_rng(seed), 2, lo=0.3, hi=4.0)
    radii = np.array([1.0, 2.0])
    s = fit_scale(Ellipsoid.from_matrix(H), polydisc(radii), CFG, rtol=1e-12)
    expect = np.min(radii / np.sqrt(np.diag(np.linalg.inv(H)).real))
    assert s == pytest.approx(expect, rel=1e-9)


def test_contacts_of_the_polydisc_optimum_carry_a_certificate():
    E = Ellipsoid.from_matrix(np.diag([1.0, 0.25]))
    contacts = contact_points(E, polydisc([1.0, 2.0]))
    assert len(contacts) >= 4
    np.testing.assert_allclose(contacts.form_residual, 0, atol=1e-12)
    assert np.all(contacts.rho >= -CFG.contact_eps)
    _, rep = fit_measure(E.form, contacts)
    assert rep.matrix_residual < 1e-6


def test_no_contacts_strictly_inside():
    assert len(contact_points(Ellipsoid.ball(2, 0.5), ball(n=2))) == 0


def test_contacts_in_one_variable_union():
    # the unit disc touches the boundary of the union along its arc outside D,
    # whose end points are near +-i
    d = planar_union([(2.0, 2.0), (0.0, 1.0)])
    contacts = contact_points(Ellipsoid.ball(1), d)
    z = contacts.points[:, 0]
    assert np.all(np.abs(np.abs(z) - 1) < 1e-12)
    assert np.all(np.abs(z - 2) >= 2 - 1e-6)
    assert np.min(np.abs(z - 1j)) < 0.05 and np.min(np.abs(z + 1j)) < 0.05


def test_csv_and_json_outputs():
    contacts = contact_points(Ellipsoid.from_matrix(np.diag([1.0, 0.25])), polydisc([1.0, 2.0]))
    lines = contacts.to_csv().strip().splitlines()
    assert lines[0] == "re0,im0,re1,im1,rho,form_residual"
    assert len(lines) == len(contacts) + 1
    assert len(contacts.to_json()["points"]) == len(contacts)


def test_dimension_mismatch_and_bad_config():
    with pytest.raises(ValidationError):
        scan(Ellipsoid.ball(3), ball(n=2))
    with pytest.raises(ValidationError):
        ContainmentConfig(sphere_samples=0)
    with pytest.raises(ValidationError):
        ContainmentConfig(contact_eps=-1)
