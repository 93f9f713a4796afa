"""Discrete contact measures certifying maximality.

For a form ``H`` and points ``z_i`` with weights ``mu_i`` the integral
condition ``sum_i mu_i h(T z_i, z_i) = tr T`` for every operator ``T`` is
equivalent to the matrix identity ``sum_i mu_i z_i z_i* = H^{-1}``, since
``h(T z, z) = tr(T z z* H)``.  For translated ellipsoids ``E_{h,c}`` the
conditions become ``sum_i mu_i (z_i - c) = 0`` and
``sum_i mu_i z_i (z_i - c)* = H^{-1}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .hermitian import HPDForm, ValidationError, complex_from_json, complex_to_json

ANALYTIC_TOL = 1e-8
SOLVER_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class ContactMeasure:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.points, dtype=complex))
        w = np.asarray(self.weights, dtype=float).ravel()
        if P.shape[0] != w.size:
            raise ValidationError(f"{P.shape[0]} points but {w.size} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite and nonnegative")
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def moment(self, center=None) -> np.ndarray:
        """``sum_i mu_i z_i (z_i - c)*``."""
        Zc = self.points if center is None else self.points - np.asarray(center)
        return np.einsum("i,ij,ik->jk", self.weights, self.points, Zc.conj())

    def first_moment(self, center=None) -> np.ndarray:
        Zc = self.points if center is None else self.points - np.asarray(center)
        return self.weights @ Zc

    def to_json(self) -> dict:
        return {"points": complex_to_json(self.points), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj) -> "ContactMeasure":
        try:
            return cls(complex_from_json(obj["points"]), obj["weights"])
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed measure JSON: {exc!r}") from exc


def _form(H) -> HPDForm:
    return H if isinstance(H, HPDForm) else HPDForm(np.asarray(H, dtype=complex))


def centered_residual(H, m: ContactMeasure) -> float:
    """``|| sum mu_i z_i z_i* - H^{-1} ||_F``."""
    H = _form(H)
    return float(np.linalg.norm(m.moment() - H.inv()))


def check_trace_identity(H, m: ContactMeasure, T) -> float:
    """``| sum mu_i h(T z_i, z_i) - tr T |`` by direct summation."""
    H = _form(H)
    T = np.asarray(T, dtype=complex)
    TZ = m.points @ T.T
    vals = np.einsum("ij,jk,ik->i", m.points.conj(), H.matrix, TZ)
    return float(abs(m.weights @ vals - np.trace(T)))


def translate_residuals(H, c, m: ContactMeasure) -> tuple[float, float]:
    """``(|| sum mu_i (z_i - c) ||, || sum mu_i z_i (z_i - c)* - H^{-1} ||_F)``."""
    H = _form(H)
    c = np.asarray(c, dtype=complex)
    return (float(np.linalg.norm(m.first_moment(c))),
            float(np.linalg.norm(m.moment(c) - H.inv())))


def _realify(M: np.ndarray) -> np.ndarray:
    M = M.reshape(M.shape[0], -1)
    return np.concatenate([M.real, M.imag], axis=1)


def moment_system(H: HPDForm, Z: np.ndarray, center=None) -> tuple[np.ndarray, np.ndarray]:
    """Real linear system ``A mu = b`` encoding the certificate identities.

    Rows are the real and imaginary parts of the matrix identity, followed
    (translate mode, ``center`` given) by those of the first moment.
    """
    n = H.n
    if center is None:
        cols = _realify(np.einsum("ij,ik->ijk", Z, Z.conj()))
        rhs = _realify(H.inv()[None])[0]
    else:
        Zc = Z - np.asarray(center)
        cols = np.concatenate([_realify(np.einsum("ij,ik->ijk", Z, Zc.conj())),
                               _realify(Zc)], axis=1)
        rhs = np.concatenate([_realify(H.inv()[None])[0], np.zeros(2 * n)])
    return cols.T, rhs


@dataclass
class CertificateReport:
    matrix_residual: float
    total_mass: float
    mass_deviation: float
    trace_checks: list = field(default_factory=list)
    vector_residual: float | None = None
    translate_matrix_residual: float | None = None
    threshold: float = SOLVER_TOL
    mode: str = "centered"

    @property
    def passed(self) -> bool:
        worst = self.matrix_residual if self.mode == "centered" else max(
            self.vector_residual, self.translate_matrix_residual)
        return bool(worst <= self.threshold)

    @property
    def status(self) -> str:
        return "certified" if self.passed else "certificate_not_found"

    def to_json(self) -> dict:
        return {"mode": self.mode, "status": self.status, "threshold": self.threshold,
                "matrix_residual": self.matrix_residual, "total_mass": self.total_mass,
                "mass_deviation": self.mass_deviation, "trace_checks": self.trace_checks,
                "vector_residual": self.vector_residual,
                "translate_matrix_residual": self.translate_matrix_residual}


def certificate_report(H, m: ContactMeasure, center=None,
                       threshold: float = SOLVER_TOL, seed: int = 0) -> CertificateReport:
    """Residuals of ``m`` as a certificate for ``E_{h,c}``.

    ``center=None`` selects the centered conditions; otherwise the
    translate conditions are evaluated as well.  Trace-identity spot checks
    use ``T = Id`` and three seeded random operators.
    """
    H = _form(H)
    n = H.n
    rng = np.random.default_rng(seed)
    Ts = [np.eye(n)] + [rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
                        for _ in range(3)]
    if center is None:
        traces = [check_trace_identity(H, m, T) for T in Ts]
    else:
        c = np.asarray(center, dtype=complex)
        traces = [_translate_trace(H, c, m, T) for T in Ts]
    rep = CertificateReport(
        matrix_residual=centered_residual(H, m),
        total_mass=m.mass,
        mass_deviation=abs(m.mass - n),
        trace_checks=traces,
        threshold=threshold,
        mode="centered" if center is None else "translate",
    )
    if center is not None:
        rep.vector_residual, rep.translate_matrix_residual = translate_residuals(H, center, m)
    return rep


def _translate_trace(H: HPDForm, c, m: ContactMeasure, T) -> float:
    """``| sum mu_i h(T z_i, z_i - c) - tr T |``."""
    TZ = m.points @ np.asarray(T).T
    vals = np.einsum("ij,jk,ik->i", (m.points - c).conj(), H.matrix, TZ)
    return float(abs(m.weights @ vals - np.trace(T)))


def fit_measure(H, contacts, center=None, warm: ContactMeasure | None = None,
                threshold: float = SOLVER_TOL) -> tuple[ContactMeasure, CertificateReport]:
    """Nonnegative least-squares weights on the contact points.

    ``contacts`` is a ``ContactSet`` or an array of points.  When ``warm``
    (typically LP duals) is given, the better of it and the NNLS fit is
    kept.  ``report.passed`` is false above ``threshold``.
    """
    H = _form(H)
    Z = getattr(contacts, "points", contacts)
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    if Z.shape[0] == 0:
        raise ValidationError("cannot fit a measure on an empty contact set")
    A, b = moment_system(H, Z, center)
    mu, _ = nnls(A, b, maxiter=max(50 * A.shape[1], 1000))
    m = ContactMeasure(Z, mu)
    if warm is not None and len(warm):
        Aw, bw = moment_system(H, warm.points, center)
        if np.linalg.norm(Aw @ warm.weights - bw) < np.linalg.norm(A @ mu - b):
            m = warm
    keep = m.weights > 0
    m = ContactMeasure(m.points[keep], m.weights[keep])
    return m, certificate_report(H, m, center, threshold)


def prune_support(m: ContactMeasure, center=None, H=None, tol: float = 1e-13) -> ContactMeasure:
    """Caratheodory reduction of the support, moments preserved.

    Repeatedly takes a null vector of the moment map on the current
    support and moves the weights along it until one hits zero.  The moment
    map has real dimension at most ``2 n^2`` (plus ``2n`` first-moment rows
    in translate mode) and includes the total mass.
    """
    keep = m.weights > 0
    P, w = m.points[keep], m.weights[keep].copy()
    n = m.n

    def system(P):
        form = _form(H) if H is not None else HPDForm(np.eye(n))
        A, _ = moment_system(form, P, center)
        return np.vstack([A, np.ones(P.shape[0])])

    while w.size > 1:
        A = system(P)
        _, s, Vt = np.linalg.svd(A)
        rank = int(np.sum(s > tol * max(1.0, s[0]) * max(A.shape)))
        if w.size <= rank:
            break
        v = Vt[-1]
        if not np.any(v > 0):
            v = -v
        pos = v > 0
        ratios = np.full(w.size, np.inf)
        ratios[pos] = w[pos] / v[pos]
        i = int(np.argmin(ratios))
        w = w - ratios[i] * v
        w[i] = 0.0
        w = np.where(w > tol * w.max(), w, 0.0)
        nz = w > 0
        P, w = P[nz], w[nz]
    return ContactMeasure(P, w)
