"""Inscription tests and contact-point extraction.

Everything is parametrized by the unit sphere of ``w`` in C^n through
``z = c + H^{-1/2} w``, which maps it onto the boundary of the ellipsoid.
The maximum of ``rho`` over that sphere is located by low-discrepancy
sampling followed by projected gradient ascent from the best samples.
The result is a lower bound on the true maximum, not a certified value.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import norm, qmc

from .domains import DomainSpec
from .hermitian import Ellipsoid, ValidationError, complex_to_json


@dataclass(frozen=True)
class ContainmentConfig:
    sphere_samples: int = 4096
    ascent_starts: int = 32
    ascent_steps: int = 200
    contact_eps: float = 1e-6
    dedup_angle: float = 0.05
    start_separation: float = 0.25
    inscribed_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if min(self.sphere_samples, self.ascent_starts, self.ascent_steps) < 1:
            raise ValidationError("containment counts must be >= 1")
        if min(self.contact_eps, self.dedup_angle, self.inscribed_tol) <= 0:
            raise ValidationError("containment tolerances must be positive")


@lru_cache(maxsize=32)
def _sphere_cached(n: int, count: int, seed: int) -> np.ndarray:
    U = qmc.Halton(d=2 * n, scramble=True, seed=seed).random(count)
    X = norm.ppf(np.clip(U, 1e-12, 1 - 1e-12))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    W = X[:, :n] + 1j * X[:, n:]
    W.setflags(write=False)
    return W


def sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic near-uniform points on the unit sphere of C^n.

    Scrambled Halton points pushed through the Gaussian quantile and
    normalized; the first ``k`` points do not depend on ``count``.
    """
    return _sphere_cached(n, count, seed)


def boundary_point(E: Ellipsoid, w) -> np.ndarray:
    """``c + H^{-1/2} w``; lies on the boundary of ``E`` when ``|w| = 1``."""
    w = np.asarray(w, dtype=complex)
    if abs(np.linalg.norm(w) - 1.0) > 1e-12:
        raise ValidationError("w must be a unit vector")
    return E.center + E.form.inv_sqrt() @ w


def _angles(W: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip((W.conj() @ w).real, -1.0, 1.0))


def _spread_pick(W: np.ndarray, f: np.ndarray, k: int, sep: float) -> np.ndarray:
    """Indices of up to ``k`` high values of ``f``, greedily kept ``sep`` apart.

    Topped up with the next best values when separation leaves fewer.
    """
    order = np.lexsort((np.arange(f.size), -f))
    chosen = _leaders(W, order, sep, k)
    if len(chosen) < k:
        taken = set(chosen)
        chosen += [int(i) for i in order if int(i) not in taken][: k - len(chosen)]
    return np.array(chosen, dtype=int)


def _leaders(W: np.ndarray, order: np.ndarray, sep: float, limit: int | None = None) -> list:
    """Greedy leader selection: visit ``order`` and keep every point at angle
    ``>= sep`` from all points kept before it."""
    covered = np.zeros(W.shape[0], bool)
    kept: list[int] = []
    for i in order:
        if covered[i]:
            continue
        kept.append(int(i))
        if limit is not None and len(kept) == limit:
            break
        covered |= _angles(W, W[i]) < sep
    return kept


# predicted gain below which an ascent start stops; far below the contact
# and inscription tolerances, so stopping costs no accuracy that matters
ASCENT_GAIN_TOL = 1e-12
# a start whose realized gains stay below this for two accepted steps is
# crawling along a degenerate maximum and is stopped
ASCENT_STALL_GAIN = 1e-10


@dataclass
class Scan:
    """Raw output of one containment scan, in sphere coordinates."""

    W: np.ndarray       # ascent end points, ascent iterates, then samples
    f: np.ndarray       # rho at the matching boundary points
    Z: np.ndarray
    n_ascent: int

    @property
    def best(self) -> int:
        # first index attaining the max keeps the reduction deterministic
        return int(np.argmax(self.f))

    @property
    def value(self) -> float:
        return float(self.f[self.best])


def _sphere_derivatives(E: Ellipsoid, d: DomainSpec, X: np.ndarray) -> tuple:
    """``f(x) = rho(c + H^{-1/2} w)`` with ``w = x[:n] + i x[n:]``: value,
    real gradient and real Hessian in ``x`` (ambient, not projected)."""
    n = E.n
    M = E.form.inv_sqrt()
    w = X[:, :n] + 1j * X[:, n:]
    Z = E.center + w @ M.T
    val, dz, Q, L = d.rho_derivatives(Z)
    # chain rule through z = c + M w; M is hermitian
    gw = dz @ M
    Qw = np.einsum("ji,pjk,kl->pil", M, Q, M)
    K = np.einsum("ij,pjk,kl->pil", M.conj().T, L.conj(), M)
    grad = 2 * np.concatenate([gw.real, -gw.imag], axis=1)
    Haa = 2 * (Qw.real + K.real)
    Hbb = 2 * (K.real - Qw.real)
    Hab = -2 * (Qw.imag + K.imag)
    Hess = np.concatenate([np.concatenate([Haa, Hab], axis=2),
                           np.concatenate([Hab.transpose(0, 2, 1), Hbb], axis=2)], axis=1)
    return val, grad, 0.5 * (Hess + Hess.transpose(0, 2, 1)), Z


def _tangent(X: np.ndarray, G: np.ndarray) -> np.ndarray:
    return G - np.sum(X * G, axis=1)[:, None] * X


def _retract(X: np.ndarray) -> np.ndarray:
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _ascend(E: Ellipsoid, d: DomainSpec, W: np.ndarray, steps: int) -> tuple:
    """Multi-start ascent of ``rho(c + H^{-1/2} w)`` on the unit sphere.

    Works in real coordinates ``x = (Re w, Im w)``.  The search direction is
    the tangent gradient preconditioned by the absolute value of the
    Riemannian Hessian (the gradient itself where that fails to ascend).
    Each trial point is followed by one correction step restricted to the
    stiff curvature directions, which lets the search follow curved ridges
    of near-maxima.  Step lengths come from Armijo backtracking by halving;
    a start stops when the step falls below ``1e-12`` or when no predicted
    gain above ``ASCENT_GAIN_TOL`` remains, or when two successive accepted
    steps each gain less than ``ASCENT_STALL_GAIN``.

    Returns the end points and, separately, every accepted iterate: along a
    near-flat ridge of maxima the iterates sample the ridge, which the end
    points alone would not.
    """
    X = np.concatenate([W.real, W.imag], axis=1)
    f, G, Hx, Z = _sphere_derivatives(E, d, X)
    m = X.shape[1]
    trail_X, trail_f, trail_Z = [], [], []
    eye = np.eye(m)
    active = np.ones(X.shape[0], bool)
    crawl = np.zeros(X.shape[0], int)
    for _ in range(steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x = X[idx]
        gt = _tangent(x, G[idx])
        P = eye - x[:, :, None] * x[:, None, :]
        radial = np.sum(x * G[idx], axis=1)
        lam, V = np.linalg.eigh(-(P @ Hx[idx] @ P - radial[:, None, None] * P))
        mag = np.abs(lam)
        mag = np.maximum(mag, 1e-8 * mag.max(axis=1, keepdims=True) + 1e-300)
        stiff = mag >= 1e-3 * mag.max(axis=1, keepdims=True)
        direc = _tangent(x, np.einsum("pij,pj->pi", V, np.einsum("pji,pj->pi", V, gt) / mag))
        slope = np.sum(direc * gt, axis=1)
        bad = ~(slope > 0) | ~np.all(np.isfinite(direc), axis=1)
        direc[bad], slope[bad] = gt[bad], np.sum(gt[bad] ** 2, axis=1)
        size = np.linalg.norm(direc, axis=1)
        scale = np.minimum(1.0, 1.0 / np.maximum(size, 1e-300))
        direc *= scale[:, None]
        slope *= scale
        done = slope <= ASCENT_GAIN_TOL * (1.0 + np.abs(f[idx]))
        active[idx[done]] = False
        keep = ~done
        idx, direc, slope = idx[keep], direc[keep], slope[keep]
        V, mag, stiff = V[keep], mag[keep], stiff[keep]
        alpha = np.ones(idx.size)
        pending = np.ones(idx.size, bool)
        while np.any(pending):
            p = np.flatnonzero(pending)
            Xn = _retract(X[idx[p]] + alpha[p, None] * direc[p])
            fn, Gn, Hn, Zn = _sphere_derivatives(E, d, Xn)
            # pull the trial back onto the ridge along the stiff directions
            coef = np.einsum("pji,pj->pi", V[p], _tangent(Xn, Gn)) * stiff[p] / mag[p]
            Xc = _retract(Xn + _tangent(Xn, np.einsum("pij,pj->pi", V[p], coef)))
            fc, Gc, Hc, Zc = _sphere_derivatives(E, d, Xc)
            better = fc > fn
            Xn[better], fn[better], Gn[better], Hn[better], Zn[better] = (
                Xc[better], fc[better], Gc[better], Hc[better], Zc[better])
            ok = fn - f[idx[p]] >= 1e-4 * alpha[p] * slope[p]
            acc = idx[p[ok]]
            small = fn[ok] - f[acc] < ASCENT_STALL_GAIN * (1.0 + np.abs(fn[ok]))
            crawl[acc] = np.where(small, crawl[acc] + 1, 0)
            active[acc[crawl[acc] >= 2]] = False
            X[acc], f[acc], G[acc], Hx[acc], Z[acc] = Xn[ok], fn[ok], Gn[ok], Hn[ok], Zn[ok]
            trail_X.append(Xn[ok])
            trail_f.append(fn[ok])
            trail_Z.append(Zn[ok])
            pending[p[ok]] = False
            alpha[p[~ok]] *= 0.5
            gone = p[~ok][alpha[p[~ok]] < 1e-12]
            active[idx[gone]] = False
            pending[gone] = False
    n = m // 2
    TX = np.concatenate(trail_X) if trail_X else np.zeros((0, m))
    trail = (TX[:, :n] + 1j * TX[:, n:],
             np.concatenate(trail_f) if trail_f else np.zeros(0),
             np.concatenate(trail_Z) if trail_Z else np.zeros((0, n), complex))
    return X[:, :n] + 1j * X[:, n:], f, Z, trail


def scan(E: Ellipsoid, d: DomainSpec, cfg: ContainmentConfig = ContainmentConfig()) -> Scan:
    """Sample the boundary of ``E`` and refine the best samples by ascent."""
    if E.n != d.n:
        raise ValidationError(f"ellipsoid dimension {E.n} != domain dimension {d.n}")
    Ws = np.array(sphere_points(E.n, cfg.sphere_samples, cfg.seed))
    Zs = E.center + Ws @ E.form.inv_sqrt().T
    fs = d.rho(Zs)
    k = min(cfg.ascent_starts, Ws.shape[0])
    starts = _spread_pick(Ws, fs, k, cfg.start_separation)
    Wa, fa, Za, (Wt, ft, Zt) = _ascend(E, d, Ws[starts].copy(), cfg.ascent_steps)
    return Scan(np.vstack([Wa, Wt, Ws]), np.concatenate([fa, ft, fs]),
                np.vstack([Za, Zt, Zs]), k)


def max_rho_on_ellipsoid(E: Ellipsoid, d: DomainSpec,
                         cfg: ContainmentConfig = ContainmentConfig()) -> tuple[float, np.ndarray]:
    """Best found maximum of ``rho`` over the boundary of ``E`` and its argmax.

    The value is a lower bound of the true maximum.  For plurisubharmonic
    ``rho`` the restriction to each complex line through the center is
    subharmonic, so the boundary maximum is the maximum over the closed
    ellipsoid.
    """
    s = scan(E, d, cfg)
    return s.value, s.Z[s.best]


def inscribed(E: Ellipsoid, d: DomainSpec,
              cfg: ContainmentConfig = ContainmentConfig()) -> tuple[bool, float]:
    """``(max rho <= cfg.inscribed_tol, margin = -max rho)``."""
    value, _ = max_rho_on_ellipsoid(E, d, cfg)
    return value <= cfg.inscribed_tol, -value


@dataclass
class ContactSet:
    points: np.ndarray                 # (k, n) boundary points z_i
    rho: np.ndarray                    # rho(z_i)
    max_value: float
    w: np.ndarray = field(repr=False)  # sphere coordinates of the points
    form_residual: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return self.points.shape[0]

    def to_json(self) -> dict:
        return {"max_rho": self.max_value,
                "points": complex_to_json(self.points),
                "rho": self.rho.tolist(),
                "form_residual": self.form_residual.tolist()}

    def to_csv(self) -> str:
        n = self.points.shape[1] if self.points.ndim == 2 else 0
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow([f"{p}{k}" for k in range(n) for p in ("re", "im")] + ["rho", "form_residual"])
        for z, r, e in zip(self.points, self.rho, self.form_residual):
            row = []
            for zk in z:
                row += [repr(float(zk.real)), repr(float(zk.imag))]
            wr.writerow(row + [repr(float(r)), repr(float(e))])
        return buf.getvalue()


def contacts_from_scan(E: Ellipsoid, s: Scan, cfg: ContainmentConfig) -> ContactSet:
    keep = np.flatnonzero(s.f >= -cfg.contact_eps)
    n = E.n
    if keep.size == 0:
        empty = np.zeros((0, n), complex)
        return ContactSet(empty, np.zeros(0), s.value, empty, np.zeros(0))
    sel = keep[_dedup(s.W[keep], s.f[keep], cfg.dedup_angle)]
    Z = s.Z[sel]
    return ContactSet(Z, s.f[sel], s.value, s.W[sel], np.abs(E.residual(Z)))


def _dedup(W: np.ndarray, f: np.ndarray, angle: float) -> np.ndarray:
    order = np.lexsort((np.arange(f.size), -f))
    return np.array(_leaders(W, order, angle), dtype=int)


def contact_points(E: Ellipsoid, d: DomainSpec,
                   cfg: ContainmentConfig = ContainmentConfig()) -> ContactSet:
    """Approximate ``bd(Omega) & bd(E)``: near-maximizers with ``rho >= -contact_eps``.

    Empty when the ellipsoid sits strictly inside by more than
    ``contact_eps``.
    """
    return contacts_from_scan(E, scan(E, d, cfg), cfg)


def fit_scale(E: Ellipsoid, d: DomainSpec, cfg: ContainmentConfig = ContainmentConfig(),
              lo: float = 0.0, hi: float | None = None, rtol: float = 1e-10) -> float:
    """Largest dilation factor ``s`` about the center with ``s E`` inscribed.

    Bisection on the scan value; ``hi`` defaults to a factor that pushes the
    ellipsoid beyond the enclosing radius.
    """
    if hi is None:
        semi_max = 1.0 / np.sqrt(np.linalg.eigvalsh(E.H)[0])
        hi = 2.0 * (d.radius + np.linalg.norm(E.center)) / semi_max
    if lo <= 0:
        lo = hi
        while lo > 1e-12:
            lo *= 0.5
            if inscribed(E.scaled(lo), d, cfg)[0]:
                break
        else:
            raise ValidationError("no inscribed dilation found; is the center inside?")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if inscribed(E.scaled(mid), d, cfg)[0]:
            lo = mid
        else:
            hi = mid
    return lo
