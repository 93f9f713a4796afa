"""Hermitian forms, hermitian ellipsoids and geodesics between them.

Convention used throughout the package: a form ``h`` is stored as its
matrix ``H`` with ``h(z, w) = w* H z`` (linear in the first slot), so that
``h(T z, z) = tr(T z z* H)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
MAX_DIM = 8


class ValidationError(ValueError):
    """Raised when an input violates a structural invariant."""


def _as_complex_matrix(M) -> np.ndarray:
    M = np.array(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if not 1 <= n <= MAX_DIM:
        raise ValidationError(f"dimension {n} outside 1..{MAX_DIM}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    return M


def check_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``M`` as a complex array, raising if it is not hermitian."""
    M = _as_complex_matrix(M)
    dev = np.max(np.abs(M - M.conj().T))
    if dev > tol * max(1.0, np.max(np.abs(M))):
        raise ValidationError(f"matrix is not hermitian (max deviation {dev:.3e})")
    return M


def eigh(M) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a hermitian matrix.

    Returns ascending real eigenvalues ``lam`` and a unitary ``V`` with
    ``M = V diag(lam) V*``.
    """
    M = check_hermitian(M)
    # symmetrize away the sub-tolerance skew part before handing to LAPACK
    lam, V = np.linalg.eigh(0.5 * (M + M.conj().T))
    return lam, V


def _spectral(H: np.ndarray, fn) -> np.ndarray:
    lam, V = eigh(H)
    out = (V * fn(lam)) @ V.conj().T
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True, eq=False)
class HPDForm:
    """Positive definite hermitian form ``h(z, w) = w* H z``."""

    matrix: np.ndarray

    def __post_init__(self):
        M = check_hermitian(self.matrix)
        M = 0.5 * (M + M.conj().T)
        lam = np.linalg.eigvalsh(M)
        if not lam[0] > 0:
            raise ValidationError(
                f"form is not positive definite (smallest eigenvalue {lam[0]:.3e})")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, z, w) -> complex:
        return complex(np.vdot(w, self.matrix @ z))

    def quad(self, Z) -> np.ndarray:
        """``h(z, z)`` for each row of ``Z`` (real)."""
        Z = np.atleast_2d(Z)
        return np.einsum("ij,jk,ik->i", Z.conj(), self.matrix, Z).real

    def det(self) -> float:
        return float(np.linalg.det(self.matrix).real)

    def inv(self) -> np.ndarray:
        return _spectral(self.matrix, lambda lam: 1.0 / lam)

    def sqrt(self) -> np.ndarray:
        return _spectral(self.matrix, np.sqrt)

    def inv_sqrt(self) -> np.ndarray:
        # the matrix is immutable, so the root is computed once per form
        M = self.__dict__.get("_inv_sqrt")
        if M is None:
            M = _spectral(self.matrix, lambda lam: 1.0 / np.sqrt(lam))
            M.setflags(write=False)
            self.__dict__["_inv_sqrt"] = M
        return M

    def normalized(self) -> np.ndarray:
        """Matrix rescaled to determinant one."""
        return self.matrix / self.det() ** (1.0 / self.n)


def frac_power(H: HPDForm, t: float) -> HPDForm:
    """``H**t`` through the spectral decomposition."""
    if t == 0:
        return HPDForm(np.eye(H.n))
    if t == 1:
        return H
    return HPDForm(_spectral(H.matrix, lambda lam: lam ** t))


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``E_{h,c} = {z : h(z - c, z - c) < 1}``; ``center = 0`` gives ``E_h``."""

    form: HPDForm
    center: np.ndarray = field(default=None)

    def __post_init__(self):
        if not isinstance(self.form, HPDForm):
            object.__setattr__(self, "form", HPDForm(self.form))
        n = self.form.n
        c = np.zeros(n, complex) if self.center is None else np.array(self.center, complex)
        if c.shape != (n,):
            raise ValidationError(f"center has shape {c.shape}, expected ({n},)")
        if not np.all(np.isfinite(c)):
            raise ValidationError("center must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @classmethod
    def from_matrix(cls, H, center=None) -> "Ellipsoid":
        return cls(HPDForm(np.asarray(H, dtype=complex)), center)

    @classmethod
    def ball(cls, n: int, radius: float = 1.0, center=None) -> "Ellipsoid":
        return cls.from_matrix(np.eye(n) / radius ** 2, center)

    @property
    def n(self) -> int:
        return self.form.n

    @property
    def H(self) -> np.ndarray:
        return self.form.matrix

    @property
    def centered(self) -> bool:
        return not np.any(self.center)

    def residual(self, Z) -> np.ndarray:
        """``h(z - c, z - c) - 1`` for each row of ``Z``."""
        return self.form.quad(np.atleast_2d(Z) - self.center) - 1.0

    def scaled(self, s: float) -> "Ellipsoid":
        """Dilate about the center by factor ``s``."""
        return Ellipsoid(HPDForm(self.H / s ** 2), self.center)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "center": complex_to_json(self.center),
            "H": complex_to_json(self.H),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Ellipsoid":
        try:
            H = complex_from_json(obj["H"])
            c = complex_from_json(obj["center"]) if "center" in obj else None
            n = int(obj.get("n", H.shape[0]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed ellipsoid JSON: {exc}") from exc
        if H.shape != (n, n):
            raise ValidationError(f"H has shape {H.shape}, expected ({n}, {n})")
        return cls.from_matrix(H, c)


def complex_to_json(a) -> list:
    """Nested lists with each complex entry as ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def volume(E: Ellipsoid) -> float:
    """Lebesgue volume in real dimension 2n: ``(pi^n / n!) / det H``."""
    return math.pi ** E.n / math.factorial(E.n) / E.form.det()


def log_volume(E: Ellipsoid) -> float:
    sign, logdet = np.linalg.slogdet(E.H)
    return E.n * math.log(math.pi) - math.lgamma(E.n + 1) - float(logdet.real)


def transport_operator(E0: Ellipsoid, E1: Ellipsoid) -> np.ndarray:
    """The positive ``h0``-self-adjoint operator ``A`` with ``A E0 = E1``.

    ``A = H0^{-1/2} C^{-1/2} H0^{1/2}`` where ``C = H0^{-1/2} H1 H0^{-1/2}``.
    It satisfies ``H0 A = A* H0`` and ``A^{-*} H0 A^{-1} = H1``.
    """
    _require_centered(E0, E1)
    R, Ri = E0.form.sqrt(), E0.form.inv_sqrt()
    C = HPDForm(Ri @ E1.H @ Ri)
    B = _spectral(C.matrix, lambda lam: lam ** -0.5)
    return Ri @ B @ R


def geodesic_point(E0: Ellipsoid, E1: Ellipsoid, t: float,
                   extrapolate: bool = False) -> Ellipsoid:
    """Point ``A^t E0`` on the geodesic from ``E0`` (t=0) to ``E1`` (t=1).

    Form matrix ``H_t = H0^{1/2} (H0^{-1/2} H1 H0^{-1/2})^t H0^{1/2}``.
    ``t`` outside ``[0, 1]`` requires ``extrapolate=True``.
    """
    _require_centered(E0, E1)
    if not extrapolate and not 0.0 <= t <= 1.0:
        raise ValidationError(f"t={t} outside [0, 1]; pass extrapolate=True")
    if t == 0:
        return E0
    if t == 1:
        return E1
    R, Ri = E0.form.sqrt(), E0.form.inv_sqrt()
    C = Ri @ E1.H @ Ri
    Ht = R @ _spectral(check_hermitian(0.5 * (C + C.conj().T)),
                       lambda lam: lam ** t) @ R
    return Ellipsoid.from_matrix(0.5 * (Ht + Ht.conj().T))


def apply_operator(E: Ellipsoid, A: np.ndarray) -> Ellipsoid:
    """Image ``c + A (E - c)`` of an ellipsoid under an invertible linear map."""
    Ai = np.linalg.inv(A)
    H = Ai.conj().T @ E.H @ Ai
    return Ellipsoid.from_matrix(0.5 * (H + H.conj().T), E.center)


def op_power(A: np.ndarray, H0: HPDForm, t: float) -> np.ndarray:
    """``A^t`` for ``A`` positive and self-adjoint with respect to ``H0``."""
    R, Ri = H0.sqrt(), H0.inv_sqrt()
    B = R @ A @ Ri
    return Ri @ _spectral(check_hermitian(0.5 * (B + B.conj().T), tol=1e-8),
                          lambda lam: lam ** t) @ R


def _require_centered(*Es: Ellipsoid):
    for E in Es:
        if not E.centered:
            raise ValidationError("geodesics are defined between centered ellipsoids")
