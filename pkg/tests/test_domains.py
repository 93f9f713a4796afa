import numpy as np
import pytest
from conftest import seeds
from hypothesis import given

from hermjohn.domains import (Polynomial, ball, cassini, domain_from_json, grid_signs,
                              hyperbola_box, levi_form, planar_union, polydisc,
                              psh_sample_check, rho, sublevel, wirtinger_grad)
from hermjohn.hermitian import ValidationError

H_FD = 1e-5


def fd_wirtinger(f, z, h=H_FD):
    """``(d/dz_k f)_k = (d/dx_k - i d/dy_k) f / 2`` by central differences."""
    z = np.asarray(z, complex)
    out = np.zeros(z.size, complex)
    for k in range(z.size):
        e = np.zeros(z.size)
        e[k] = h
        dx = (f(z + e) - f(z - e)) / (2 * h)
        dy = (f(z + 1j * e) - f(z - 1j * e)) / (2 * h)
        out[k] = 0.5 * (dx - 1j * dy)
    return out


def fd_second(g, z, conj: bool, h=H_FD):
    """``d g_j / d z_k`` (``conj=False``) or ``d g_j / d zbar_k`` of a vector function."""
    z = np.asarray(z, complex)
    n = z.size
    out = np.zeros((n, n), complex)
    sign = 1 if conj else -1
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        dx = (g(z + e) - g(z - e)) / (2 * h)
        dy = (g(z + 1j * e) - g(z - 1j * e)) / (2 * h)
        out[:, k] = 0.5 * (dx + sign * 1j * dy)
    return out


def cassini_closed_form(z):
    """Gradient and Levi form of ``|z - p|^2 |z + p|^2 - lam^4``, ``p = (1, 0)``."""
    x, y = z
    ax, ay = abs(x) ** 2, abs(y) ** 2
    g = np.array([2 * np.conj(x) * (ax + ay) - 2 * x, 2 * np.conj(y) * (ax + ay + 1)])
    L = np.array([[2 * (2 * ax + ay), 2 * np.conj(x) * y],
                  [2 * x * np.conj(y), 2 * (ax + 2 * ay + 1)]])
    return g, L


def cassini_direct(z, lam):
    p = np.array([1.0, 0.0])
    return (np.linalg.norm(z - p) * np.linalg.norm(z + p)) ** 2 - lam ** 4


DOMAINS = {
    "ball": ball(center=[0.3, -0.2j], radius=1.5),
    "polydisc": polydisc([1.0, 2.0]),
    "hyperbola_box": hyperbola_box(1.0, 3.0),
    "cassini": cassini(1.2),
}


@pytest.mark.parametrize("name", sorted(DOMAINS))
@given(seed=seeds)
def test_derivatives_match_finite_differences(name, seed):
    d = DOMAINS[name]
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1, 1, d.n) + 1j * rng.uniform(-1, 1, d.n)
    val, G, Q, L = d.rho_derivatives(z)
    _, j = d.rho_active(z)
    comp = d.components[int(j[0])]
    f = lambda w: comp.value(w)[0]
    g = lambda w: comp.wgrad(w)[0]
    scale = 1 + np.abs(G).max()
    np.testing.assert_allclose(G[0], fd_wirtinger(f, z), atol=1e-7 * scale)
    np.testing.assert_allclose(L[0], fd_second(g, z, conj=True), atol=1e-6 * scale)
    np.testing.assert_allclose(Q[0], fd_second(g, z, conj=False), atol=1e-6 * scale)
    np.testing.assert_allclose(L[0], L[0].conj().T, atol=1e-13)
    np.testing.assert_allclose(Q[0], Q[0].T, atol=1e-13)


@given(seeds)
def test_cassini_against_closed_forms(seed):
    rng = np.random.default_rng(seed)
    d = cassini(1.2)
    z = rng.uniform(-2, 2, 2) + 1j * rng.uniform(-2, 2, 2)
    g, L = cassini_closed_form(z)
    np.testing.assert_allclose(wirtinger_grad(d, 0, z), g, atol=1e-10)
    np.testing.assert_allclose(levi_form(d, 0, z), L, atol=1e-10)
    assert rho(d, z) == pytest.approx(cassini_direct(z, 1.2), abs=1e-10)


def test_cassini_critical_points_and_origin():
    d = cassini(1.2)
    for z in ([0, 0], [1, 0], [-1, 0]):
        np.testing.assert_allclose(wirtinger_grad(d, 0, np.array(z, complex)), 0, atol=1e-14)
    assert rho(d, np.zeros(2)) == pytest.approx(1 - 1.2 ** 4)
    assert rho(d, np.array([1.0, 0])) == pytest.approx(-1.2 ** 4)
    np.testing.assert_allclose(np.linalg.eigvalsh(levi_form(d, 0, np.zeros(2))), [0, 2],
                               atol=1e-14)


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_builtins_are_plurisubharmonic(name):
    assert psh_sample_check(DOMAINS[name], count=2000).min_eigenvalue >= -1e-9


def test_values_against_direct_formulas():
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(50, 2)) + 1j * rng.normal(size=(50, 2))
    hb = hyperbola_box(1.0, 3.0)
    expect = np.maximum.reduce([np.abs(Z[:, 0] * Z[:, 1]) - 1, np.abs(Z[:, 0]) - 3,
                                np.abs(Z[:, 1]) - 3])
    np.testing.assert_allclose(hb.rho(Z), expect, atol=1e-13)
    pd = polydisc([1.0, 2.0])
    np.testing.assert_allclose(pd.rho(Z), np.maximum(np.abs(Z[:, 0]) ** 2 - 1,
                                                     np.abs(Z[:, 1]) ** 2 - 4), atol=1e-13)
    b = ball(center=[0.3, -0.2j], radius=1.5)
    np.testing.assert_allclose(b.rho(Z), np.sum(np.abs(Z - [0.3, -0.2j]) ** 2, axis=1) - 2.25,
                               atol=1e-12)
    u = planar_union([(2.0, 2.0), (0.0, 1.0)])
    w = Z[:, :1]
    np.testing.assert_allclose(u.rho(w), np.minimum(np.abs(w[:, 0] - 2) - 2, np.abs(w[:, 0]) - 1),
                               atol=1e-13)


def test_enclosing_radius_bounds_the_domain():
    rng = np.random.default_rng(1)
    for d in DOMAINS.values():
        X = rng.normal(size=(4000, d.n)) + 1j * rng.normal(size=(4000, d.n))
        X *= rng.uniform(0, 1.5 * d.radius, (4000, 1)) / np.linalg.norm(X, axis=1, keepdims=True)
        inside = d.contains(X)
        assert np.all(np.linalg.norm(X[inside], axis=1) <= d.radius)


def test_json_roundtrip():
    for d in list(DOMAINS.values()) + [planar_union([(2.0, 2.0), (0.0, 1.0)])]:
        e = domain_from_json(d.to_json())
        Z = np.random.default_rng(2).normal(size=(20, d.n)) * (1 + 1j)
        np.testing.assert_allclose(e.rho(Z), d.rho(Z), atol=1e-13)
    with pytest.raises(ValidationError):
        domain_from_json({"tag": "torus"})
    with pytest.raises(ValidationError):
        domain_from_json({"tag": "cassini"})


def test_sublevel_roundtrip_and_psh_warning():
    n = 2
    x2, y2 = Polynomial.abs2(0, n), Polynomial.abs2(1, n)
    d = sublevel([x2 + y2 - 1.0], radius=1.0)
    e = domain_from_json(d.to_json())
    z = np.array([[0.3 + 0.1j, -0.2j]])
    assert e.rho(z)[0] == pytest.approx(0.09 + 0.01 + 0.04 - 1)
    # |x|^2 - |y|^2 has Levi form diag(1, -1): not plurisubharmonic
    with pytest.warns(UserWarning, match="not plurisubharmonic"):
        sublevel([x2 - y2 - 1.0, x2 + y2 - 4.0], radius=2.0)


def test_polynomial_algebra():
    n = 1
    z, zb = Polynomial.var(0, n), Polynomial.conj_var(0, n)
    p = (z * zb) ** 2 - 2 * z * zb + 1  # (|z|^2 - 1)^2
    w = np.array([[0.5 + 0.5j], [2.0 + 0j]])
    from hermjohn.domains import PolynomialComponent
    np.testing.assert_allclose(PolynomialComponent(p).value(w), (np.abs(w[:, 0]) ** 2 - 1) ** 2)
    with pytest.raises(ValidationError):
        Polynomial(2, {((1,), (0,)): 1.0})


def test_grid_signs_cassini_slice_is_connected_for_lambda_above_one():
    from scipy import ndimage
    s, vals = grid_signs(cassini(1.2), (0, 1), 2.5, num=201)
    _, count = ndimage.label(vals < 0)
    assert count == 1
    s, vals = grid_signs(cassini(0.9), (0, 1), 2.5, num=201)
    _, count = ndimage.label(vals < 0)
    assert count == 2


def test_invalid_parameters():
    with pytest.raises(ValidationError):
        ball(radius=-1)
    with pytest.raises(ValidationError):
        polydisc([1.0, 0.0])
    with pytest.raises(ValidationError):
        hyperbola_box(0, 3)
    with pytest.raises(ValidationError):
        cassini(-1)
    with pytest.raises(ValidationError):
        planar_union([])
