"""First-order volume ascent over inscribed hermitian ellipsoids.

Each iteration extracts the contact set, solves a small LP for a
deformation ``(T, a)`` that keeps every contact point on or inside the
deformed ellipsoid while growing ``Re tr T`` (the volume rate), and then
moves along ``E(t) = c + t a + e^{tT} (E - c)`` as far as inscription
allows.  When the LP optimum drops to zero its dual multipliers are a
discrete contact measure, which is refined into the returned certificate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm
from scipy.optimize import linprog, nnls

from .certificate import (CertificateReport, ContactMeasure, SOLVER_TOL, certificate_report,
                          fit_measure, prune_support)
from .containment import (ContactSet, ContainmentConfig, contacts_from_scan, inscribed,
                          scan)
from .domains import DomainSpec
from .hermitian import Ellipsoid, HPDForm, ValidationError, log_volume, volume

log = logging.getLogger(__name__)

CENTERED = "centered"
TRANSLATE = "translate"


class PreconditionError(ValueError):
    """The starting ellipsoid or domain does not meet the solver's hypotheses."""


@dataclass(frozen=True)
class SolveConfig:
    mode: str = CENTERED
    max_iters: int = 200
    lp_stop_tol: float = 1e-6
    contact_eps: float = 1e-6
    eps_start: float = 1e-4
    eps_shrink: float = 0.1
    step_init: float = 0.1
    step_shrink: float = 0.5
    min_step: float = 1e-10
    # fraction of the LP value traded for strict recession at the contacts
    recede: float = 0.1
    line_search_tol: float = 1e-8
    certificate_tol: float = SOLVER_TOL
    containment: ContainmentConfig = field(default_factory=ContainmentConfig)
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (CENTERED, TRANSLATE):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if min(self.lp_stop_tol, self.contact_eps, self.step_init, self.min_step,
               self.line_search_tol) <= 0:
            raise ValidationError("solver tolerances must be positive")
        if not 0 < self.step_shrink < 1 or not 0 <= self.recede < 1:
            raise ValidationError("step_shrink must be in (0, 1) and recede in [0, 1)")
        if self.max_iters < 0:
            raise ValidationError("max_iters must be >= 0")

    @property
    def scan_config(self) -> ContainmentConfig:
        return replace(self.containment, contact_eps=self.contact_eps, seed=self.seed)


@dataclass
class Direction:
    T: np.ndarray
    a: np.ndarray
    value: float
    duals: np.ndarray


def _lp_rows(H: np.ndarray, W: np.ndarray, translate: bool) -> np.ndarray:
    """Coefficients of ``Re h(T w + a, w)`` in ``(Re T, Im T[, Re a, Im a])``."""
    n = H.shape[0]
    # h(T w, w) = tr(T G) with G = w w* H, so Re = sum Re T_jk Re G_kj - Im T_jk Im G_kj
    G = np.einsum("ik,il,lj->ikj", W, W.conj(), H)
    Gt = G.transpose(0, 2, 1).reshape(-1, n * n)
    rows = [Gt.real, -Gt.imag]
    if translate:
        v = W.conj() @ H
        rows += [v.real, -v.imag]
    return np.hstack(rows)


def direction_lp(H, c, contacts, mode: str = CENTERED) -> Direction:
    """Best volume-growth direction compatible with the contacts.

    Maximizes ``Re tr T`` over real and imaginary parts of ``T`` (and of the
    translation ``a`` in translate mode), all boxed in ``[-1, 1]``, subject
    to ``Re h(T w_i + a, w_i) <= 0`` where ``w_i = z_i - c``.  Among optimal
    directions the one of least l1 norm is returned.  ``duals`` are the
    nonnegative multipliers of the contact constraints.
    """
    form = H if isinstance(H, HPDForm) else HPDForm(np.asarray(H, dtype=complex))
    Hm = form.matrix
    n = form.n
    translate = mode == TRANSLATE
    c = np.zeros(n, complex) if c is None else np.asarray(c, dtype=complex)
    Z = getattr(contacts, "points", contacts)
    Z = np.asarray(Z, dtype=complex).reshape(-1, n)
    W = Z - c
    nv = 2 * n * n + (2 * n if translate else 0)
    obj = np.zeros(nv)
    obj[np.arange(n) * (n + 1)] = -1.0
    bounds = [(-1.0, 1.0)] * nv
    A = _lp_rows(Hm, W, translate) if W.shape[0] else None
    b = np.zeros(W.shape[0]) if W.shape[0] else None
    res = linprog(obj, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"direction LP failed: {res.message}")
    value = float(-res.fun)
    duals = (np.maximum(-res.ineqlin.marginals, 0.0) if W.shape[0] else np.zeros(0))
    x = res.x
    if value > 0:
        x = _least_l1(obj, A, b, value, nv)
        if x is None:
            x = res.x
    T = (x[: n * n] + 1j * x[n * n: 2 * n * n]).reshape(n, n)
    a = x[2 * n * n: 2 * n * n + n] + 1j * x[2 * n * n + n:] if translate else np.zeros(n, complex)
    return Direction(T, a, value, duals)


def _least_l1(obj, A, b, value, nv) -> np.ndarray:
    # variables (x, u) with |x| <= u; keep the objective within a hair of optimal
    I = np.eye(nv)
    rows = [np.hstack([I, -I]), np.hstack([-I, -I]), np.hstack([obj, np.zeros(nv)])[None]]
    rhs = [np.zeros(nv), np.zeros(nv), [-(value - 1e-10 * max(value, 1.0))]]
    if A is not None:
        rows.append(np.hstack([A, np.zeros_like(A)]))
        rhs.append(b)
    res = linprog(np.concatenate([np.zeros(nv), np.ones(nv)]),
                  A_ub=np.vstack(rows), b_ub=np.concatenate(rhs),
                  bounds=[(-1.0, 1.0)] * nv + [(0.0, 1.0)] * nv, method="highs")
    return res.x[:nv] if res.status == 0 else None


def projected_direction(H, c, contacts, mode: str = CENTERED) -> Direction:
    """Volume-growth direction closest to the pure dilation.

    In h-orthonormal coordinates ``u_i = H^{1/2} (z_i - c)`` the operator is
    a hermitian ``S = H^{1/2} T H^{-1/2}`` and the translation
    ``b = H^{1/2} a``.  The direction is the Euclidean projection of
    ``(Id, 0)`` onto the cone ``{u_i* S u_i + Re u_i* b <= 0}``; by duality
    ``S = Id - sum mu_i u_i u_i*`` and ``b = -sum mu_i u_i`` with ``mu >= 0``
    a nonnegative least-squares fit of the certificate identities.  The
    returned ``value = tr S = ||S||^2 + ||b||^2`` vanishes exactly when a
    certificate exists on the contacts.
    """
    form = H if isinstance(H, HPDForm) else HPDForm(np.asarray(H, dtype=complex))
    n = form.n
    translate = mode == TRANSLATE
    c = np.zeros(n, complex) if c is None else np.asarray(c, dtype=complex)
    Z = np.asarray(getattr(contacts, "points", contacts), dtype=complex).reshape(-1, n)
    R, Ri = form.sqrt(), form.inv_sqrt()
    U = (Z - c) @ R.T
    if U.shape[0] == 0:
        return Direction(np.eye(n, dtype=complex), np.zeros(n, complex), float(n), np.zeros(0))
    outer = np.einsum("ij,ik->ijk", U, U.conj()).reshape(U.shape[0], -1)
    A = np.concatenate([outer.real, outer.imag], axis=1)
    rhs = np.concatenate([np.eye(n).ravel(), np.zeros(n * n)])
    if translate:
        A = np.concatenate([A, U.real, U.imag], axis=1)
        rhs = np.concatenate([rhs, np.zeros(2 * n)])
    mu, _ = nnls(A.T, rhs, maxiter=max(50 * A.shape[0], 1000))
    S = np.eye(n) - np.einsum("i,ij,ik->jk", mu, U, U.conj())
    S = 0.5 * (S + S.conj().T)
    b = -(mu @ U) if translate else np.zeros(n, complex)
    value = float(np.trace(S).real)
    return Direction(Ri @ S @ R, Ri @ b, value, mu)


def self_adjoint_part(T: np.ndarray, H: np.ndarray) -> np.ndarray:
    """``(T + H^{-1} T* H) / 2``: same ``Re h(T z, z)`` and ``Re tr T`` as ``T``."""
    return 0.5 * (T + np.linalg.solve(H, T.conj().T @ H))


def deform(E: Ellipsoid, T: np.ndarray, a: np.ndarray, t: float) -> Ellipsoid:
    """``c + t a + e^{tT} (E - c)``: form ``e^{-tT*} H e^{-tT}``."""
    P = expm(-t * T)
    Hn = P.conj().T @ E.H @ P
    return Ellipsoid.from_matrix(0.5 * (Hn + Hn.conj().T), E.center + t * np.asarray(a))


@dataclass
class StepResult:
    ellipsoid: Ellipsoid
    t: float
    stalled: bool
    evaluations: int
    scan_value: float


def step(E: Ellipsoid, T: np.ndarray, a: np.ndarray, d: DomainSpec,
         cfg: SolveConfig = SolveConfig()) -> StepResult:
    """Move along ``E(t)`` to (nearly) the largest inscribed ``t``.

    Starting from ``step_init`` the step is doubled while inscribed or
    shrunk until inscribed; the bracket is then tightened by regula falsi on
    the scan value until the deformed ellipsoid touches within
    ``line_search_tol``.  ``stalled`` when no inscribed ``t >= min_step``
    exists.
    """
    scfg = cfg.scan_config
    tol = scfg.inscribed_tol
    evals = 0

    def phi(t):
        nonlocal evals
        evals += 1
        Et = deform(E, T, a, t)
        return scan(Et, d, scfg).value, Et

    t = cfg.step_init
    f, Et = phi(t)
    if f <= tol:
        lo, flo, Elo = t, f, Et
        hi = fhi = None
        for _ in range(40):
            t = lo / cfg.step_shrink
            f, Et = phi(t)
            if f > tol:
                hi, fhi = t, f
                break
            lo, flo, Elo = t, f, Et
        if hi is None:
            return StepResult(Elo, lo, False, evals, flo)
    else:
        hi, fhi = t, f
        while True:
            t *= cfg.step_shrink
            if t < cfg.min_step:
                return StepResult(E, 0.0, True, evals, f)
            f, Et = phi(t)
            if f <= tol:
                lo, flo, Elo = t, f, Et
                break
            hi, fhi = t, f
    # Illinois variant of regula falsi, keeping the feasible end as the answer
    target = -0.5 * cfg.line_search_tol
    side = 0
    touch = flo
    for _ in range(60):
        if touch >= -cfg.line_search_tol or hi - lo <= 1e-15 * hi:
            break
        gl, gh = flo - target, fhi - target
        t = lo + (hi - lo) * gl / (gl - gh)
        if not lo < t < hi:
            t = 0.5 * (lo + hi)
        f, Et = phi(t)
        if f <= tol:
            lo, flo, Elo, touch = t, f, Et, f
            if side == -1:
                fhi = target + 0.5 * (fhi - target)
            side = -1
        else:
            hi, fhi = t, f
            if side == 1:
                flo = target + 0.5 * (flo - target)
            side = 1
    return StepResult(Elo, lo, False, evals, touch)


@dataclass
class SolveReport:
    ellipsoid: Ellipsoid
    volumes: list
    termination: str
    mode: str
    local_only: bool
    lp_values: list
    steps: list
    measure: ContactMeasure | None = None
    certificate: CertificateReport | None = None
    contacts: ContactSet | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def volume(self) -> float:
        return self.volumes[-1]

    @property
    def iterations(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "termination": self.termination,
            "local_only": self.local_only,
            "ellipsoid": self.ellipsoid.to_json(),
            "volume": self.volume,
            "trace": [{"iteration": i, "volume": v, "lp_value": lp, "step": s}
                      for i, (v, lp, s) in enumerate(zip(
                          self.volumes, self.lp_values, [None] + self.steps))],
            "measure": self.measure.to_json() if self.measure is not None else None,
            "certificate": self.certificate.to_json() if self.certificate is not None else None,
            "diagnostics": self.diagnostics,
        }

    def volume_trace_csv(self) -> str:
        lines = ["iteration,volume,log_volume"]
        for i, v in enumerate(self.volumes):
            lines.append(f"{i},{v!r},{np.log(v)!r}")
        return "\n".join(lines) + "\n"


def solve(d: DomainSpec, E0: Ellipsoid, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Volume ascent from an inscribed ellipsoid.

    Centered mode keeps the center at 0 and, on termination with a zero LP
    value, carries a certificate for global maximality.  Translate mode
    also moves the center; its certificate is only a necessary condition,
    so the report is flagged ``local_only``.
    """
    translate = cfg.mode == TRANSLATE
    scfg = cfg.scan_config
    if not translate:
        if not E0.centered:
            raise PreconditionError("centered mode needs a seed centered at 0")
        if d.rho(np.zeros(d.n))[0] >= 0:
            raise PreconditionError("centered mode needs 0 inside the domain")
    ok, margin = inscribed(E0, d, scfg)
    if not ok:
        raise PreconditionError(f"seed ellipsoid is not inscribed (margin {margin:.3e})")

    E = E0
    volumes = [volume(E)]
    lp_values: list[float] = []
    steps: list[float] = []
    evals = 0
    termination = "max_iters"
    direction = contacts = None
    # contacts are collected at tolerance eps, tightened to contact_eps
    # whenever the LP certifies the current eps-contact set
    eps = max(cfg.eps_start, cfg.contact_eps)
    n = E.n
    while True:
        s = scan(E, d, scfg)
        contacts = contacts_from_scan(E, s, replace(scfg, contact_eps=eps))
        direction = direction_lp(E.form, E.center, contacts, cfg.mode)
        log.debug("iter %d: vol %.12g lp %.3e eps %.1e contacts %d", len(steps),
                  volumes[-1], direction.value, eps, len(contacts))
        if direction.value <= cfg.lp_stop_tol and eps <= cfg.contact_eps:
            termination = "lp_optimal"
            break
        if direction.value <= max(eps, cfg.lp_stop_tol) and eps > cfg.contact_eps:
            eps = max(eps * cfg.eps_shrink, cfg.contact_eps)
            continue
        if len(steps) >= cfg.max_iters:
            break
        move = projected_direction(E.form, E.center, contacts, cfg.mode)
        T = move.T - (cfg.recede * move.value / n) * np.eye(n)
        res = step(E, T, move.a, d, cfg)
        evals += res.evaluations
        if res.stalled:
            if eps > cfg.contact_eps:
                eps = max(eps * cfg.eps_shrink, cfg.contact_eps)
                continue
            termination = "step_stall"
            break
        E = res.ellipsoid
        steps.append(res.t)
        lp_values.append(direction.value)
        volumes.append(max(volume(E), volumes[-1]))
    lp_values.append(direction.value)

    report = SolveReport(E, volumes, termination, cfg.mode, translate, lp_values, steps,
                         contacts=contacts,
                         diagnostics={"scan_evaluations": evals,
                                      "log_volume": log_volume(E),
                                      "contacts": len(contacts) if contacts is not None else 0})
    if contacts is not None and len(contacts):
        center = E.center if translate else None
        warm = ContactMeasure(contacts.points, direction.duals) \
            if direction.duals.size == len(contacts) else None
        m, _ = fit_measure(E.form, contacts, center, warm=warm,
                           threshold=cfg.certificate_tol)
        m = prune_support(m, center=center, H=E.form)
        report.measure = m
        report.certificate = certificate_report(E.form, m, center, cfg.certificate_tol)
    return report
