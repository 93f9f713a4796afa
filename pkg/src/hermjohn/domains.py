"""Bounded domains given by smooth defining functions.

A domain is ``{z : rho(z) < 0}`` where ``rho`` combines finitely many smooth
components by ``max`` (intersections) or, for unions of planar discs, by
``min``.  Every component exposes its value, Wirtinger gradient
``(d rho_j / d z_k)_k`` and Levi form ``(d^2 rho_j / d z_k d zbar_l)_{kl}``,
vectorized over rows of a complex ``(m, n)`` array.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .hermitian import ValidationError, complex_from_json, complex_to_json


def _rows(Z) -> np.ndarray:
    return np.atleast_2d(np.asarray(Z, dtype=complex))


class Polynomial:
    """Real polynomial in ``(z, zbar)``: ``Re sum_t c_t z^alpha_t zbar^beta_t``.

    Terms are stored after hermitian symmetrization, so the sum is real and
    the Wirtinger derivatives below are exact.
    """

    def __init__(self, n: int, terms: dict | None = None):
        self.n = n
        self.terms = {}
        for (a, b), c in (terms or {}).items():
            key = (tuple(int(x) for x in a), tuple(int(x) for x in b))
            if len(key[0]) != n or len(key[1]) != n:
                raise ValidationError(f"multi-index length must be {n}")
            if min(key[0] + key[1], default=0) < 0:
                raise ValidationError("negative exponent in multi-index")
            self.terms[key] = self.terms.get(key, 0) + complex(c)
        self._compiled = None

    @classmethod
    def const(cls, c, n: int) -> "Polynomial":
        zero = (0,) * n
        return cls(n, {(zero, zero): c})

    @classmethod
    def var(cls, k: int, n: int) -> "Polynomial":
        e = tuple(int(i == k) for i in range(n))
        return cls(n, {(e, (0,) * n): 1.0})

    @classmethod
    def conj_var(cls, k: int, n: int) -> "Polynomial":
        e = tuple(int(i == k) for i in range(n))
        return cls(n, {((0,) * n, e): 1.0})

    @classmethod
    def abs2(cls, k: int, n: int, shift: complex = 0.0) -> "Polynomial":
        """``|z_k - shift|^2``."""
        z = cls.var(k, n) - shift
        zb = cls.conj_var(k, n) - np.conj(shift)
        return z * zb

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise ValidationError("dimension mismatch between polynomials")
            return other
        return Polynomial.const(other, self.n)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for (a1, b1), c1 in self.terms.items():
            for (a2, b2), c2 in other.terms.items():
                key = (tuple(x + y for x, y in zip(a1, a2)),
                       tuple(x + y for x, y in zip(b1, b2)))
                out[key] = out.get(key, 0) + c1 * c2
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.const(1.0, self.n)
        for _ in range(k):
            out = out * self
        return out

    def hermitian_part(self) -> dict:
        """Coefficients of ``(P + conj(P)) / 2``, dropping zeros."""
        out: dict = {}
        for (a, b), c in self.terms.items():
            out[(a, b)] = out.get((a, b), 0) + c / 2
            out[(b, a)] = out.get((b, a), 0) + np.conj(c) / 2
        return {k: c for k, c in out.items() if abs(c) > 0}

    def degree(self) -> int:
        return max((sum(a) + sum(b) for a, b in self.terms), default=0)

    def to_json(self) -> list:
        return [{"z": list(a), "zbar": list(b), "coeff": [c.real, c.imag]}
                for (a, b), c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, obj, n: int) -> "Polynomial":
        try:
            terms = {}
            for t in obj:
                c = t["coeff"]
                c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
                key = (tuple(t["z"]), tuple(t["zbar"]))
                terms[key] = terms.get(key, 0) + c
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"malformed polynomial term: {exc}") from exc
        return cls(n, terms)


class _TermTable:
    """Monomials with output slots, evaluated in one pass."""

    def __init__(self, n: int, entries: list, nslots: int):
        # entries: (slot, alpha, beta, coeff)
        self.n = n
        self.nslots = nslots
        self.A = np.array([e[1] for e in entries], dtype=int).reshape(-1, n)
        self.B = np.array([e[2] for e in entries], dtype=int).reshape(-1, n)
        W = np.zeros((nslots, len(entries)), complex)
        for t, e in enumerate(entries):
            W[e[0], t] += e[3]
        self.W = W
        self.maxdeg = int(max(self.A.max(initial=0), self.B.max(initial=0)))

    def __call__(self, Z: np.ndarray) -> np.ndarray:
        m = Z.shape[0]
        if not self.W.shape[1]:
            return np.zeros((m, self.nslots), complex)
        # P[k, e, :] = z_k ** e
        P = np.ones((self.n, self.maxdeg + 1, m), complex)
        for e in range(1, self.maxdeg + 1):
            P[:, e, :] = P[:, e - 1, :] * Z.T
        Pc = P.conj()
        mono = np.ones((self.W.shape[1], m), complex)
        for k in range(self.n):
            mono *= P[k, self.A[:, k]] * Pc[k, self.B[:, k]]
        return (self.W @ mono).T


class PolynomialComponent:
    """Smooth component given by a real polynomial in ``(z, zbar)``."""

    def __init__(self, poly: Polynomial):
        self.poly = poly
        self.n = poly.n
        terms = poly.hermitian_part()
        n = self.n
        val, grad, levi, hol = [], [], [], []
        for (a, b), c in terms.items():
            val.append((0, a, b, c))
            for k in range(n):
                if a[k] == 0:
                    continue
                a1 = tuple(x - (i == k) for i, x in enumerate(a))
                grad.append((k, a1, b, c * a[k]))
                for l in range(n):
                    if b[l] > 0:
                        b1 = tuple(x - (i == l) for i, x in enumerate(b))
                        levi.append((k * n + l, a1, b1, c * a[k] * b[l]))
                    if a1[l] > 0:
                        a2 = tuple(x - (i == l) for i, x in enumerate(a1))
                        hol.append((k * n + l, a2, b, c * a[k] * a1[l]))
        self._val = _TermTable(n, val, 1)
        self._grad = _TermTable(n, grad, n)
        self._levi = _TermTable(n, levi, n * n)
        self._hol = _TermTable(n, hol, n * n)

    def value(self, Z) -> np.ndarray:
        return self._val(_rows(Z))[:, 0].real

    def wgrad(self, Z) -> np.ndarray:
        return self._grad(_rows(Z))

    def levi(self, Z) -> np.ndarray:
        Z = _rows(Z)
        L = self._levi(Z).reshape(-1, self.n, self.n)
        return 0.5 * (L + L.conj().transpose(0, 2, 1))

    def hol_hess(self, Z) -> np.ndarray:
        """``(d^2 rho / d z_k d z_l)_{kl}`` (complex symmetric)."""
        Q = self._hol(_rows(Z)).reshape(-1, self.n, self.n)
        return 0.5 * (Q + Q.transpose(0, 2, 1))

    def to_json(self):
        return self.poly.to_json()


class ModulusComponent:
    """``|prod_k (z_k - a_k)^alpha_k| - bound``.

    Smooth away from the zero set of the product.  ``log`` of the modulus is
    pluriharmonic there, so the Levi form is ``|m| g g*`` with
    ``g_k = alpha_k / (2 (z_k - a_k))``.
    """

    def __init__(self, n: int, alpha, bound: float, shift=None):
        self.n = n
        self.alpha = np.asarray(alpha, dtype=int)
        self.bound = float(bound)
        self.shift = np.zeros(n, complex) if shift is None else np.asarray(shift, complex)

    def _parts(self, Z):
        W = _rows(Z) - self.shift
        mod = np.prod(np.abs(W) ** self.alpha, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(self.alpha > 0, self.alpha / (2 * W), 0)
        g = np.where(np.isfinite(g), g, 0)
        return mod, g

    def value(self, Z) -> np.ndarray:
        mod, _ = self._parts(Z)
        return mod - self.bound

    def wgrad(self, Z) -> np.ndarray:
        mod, g = self._parts(Z)
        return mod[:, None] * g

    def levi(self, Z) -> np.ndarray:
        mod, g = self._parts(Z)
        return mod[:, None, None] * g[:, :, None] * g[:, None, :].conj()

    def derivatives(self, Z) -> tuple:
        """``(wgrad, hol_hess, levi)`` sharing one evaluation of the parts."""
        mod, g = self._parts(Z)
        return (mod[:, None] * g, self._hol_hess(mod, g),
                mod[:, None, None] * g[:, :, None] * g[:, None, :].conj())

    def hol_hess(self, Z) -> np.ndarray:
        return self._hol_hess(*self._parts(Z))

    def _hol_hess(self, mod, g) -> np.ndarray:
        # d g_k / d z_k = -alpha_k / (2 (z_k - a_k)^2) = -2 g_k^2 / alpha_k
        scale = np.where(self.alpha > 0, 2.0 / np.maximum(self.alpha, 1), 0.0)
        Q = g[:, :, None] * g[:, None, :]
        idx = np.arange(self.n)
        Q[:, idx, idx] -= scale * g ** 2
        return mod[:, None, None] * Q


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Bounded domain ``{rho < 0}``, ``rho`` = max (or min) of components."""

    tag: str
    n: int
    params: dict
    components: tuple
    radius: float
    combine: str = "max"
    labels: tuple = field(default=())

    def component_values(self, Z) -> np.ndarray:
        Z = _rows(Z)
        return np.stack([c.value(Z) for c in self.components])

    def rho_active(self, Z) -> tuple[np.ndarray, np.ndarray]:
        """Combined value and the index of the component realizing it."""
        V = self.component_values(Z)
        j = np.argmax(V, axis=0) if self.combine == "max" else np.argmin(V, axis=0)
        return V[j, np.arange(V.shape[1])], j

    def rho(self, Z) -> np.ndarray:
        return self.rho_active(Z)[0]

    def rho_and_grad(self, Z) -> tuple[np.ndarray, np.ndarray]:
        """Value and Wirtinger gradient of the active component, per row."""
        Z = _rows(Z)
        val, j = self.rho_active(Z)
        if len(self.components) == 1:
            return val, self.components[0].wgrad(Z)
        G = np.zeros(Z.shape, complex)
        for i, c in enumerate(self.components):
            sel = j == i
            if np.any(sel):
                G[sel] = c.wgrad(Z[sel])
        return val, G

    def rho_derivatives(self, Z) -> tuple:
        """Value, Wirtinger gradient, ``d^2/dz dz`` and Levi form of the
        active component, per row."""
        Z = _rows(Z)
        val, j = self.rho_active(Z)
        m, n = Z.shape
        G = np.zeros((m, n), complex)
        Q = np.zeros((m, n, n), complex)
        L = np.zeros((m, n, n), complex)
        for i, c in enumerate(self.components):
            sel = slice(None) if len(self.components) == 1 else j == i
            if len(self.components) > 1 and not np.any(sel):
                continue
            Zs = Z[sel]
            if hasattr(c, "derivatives"):
                G[sel], Q[sel], L[sel] = c.derivatives(Zs)
            else:
                G[sel], Q[sel], L[sel] = c.wgrad(Zs), c.hol_hess(Zs), c.levi(Zs)
        return val, G, Q, L

    def contains(self, Z) -> np.ndarray:
        return self.rho(Z) < 0

    def to_json(self) -> dict:
        out = {"tag": self.tag}
        out.update(self.params)
        return out


def ball(center=None, radius: float = 1.0, n: int | None = None) -> DomainSpec:
    if center is None:
        center = np.zeros(n or 2, complex)
    c = np.asarray(center, dtype=complex).ravel()
    n = c.size
    if radius <= 0:
        raise ValidationError("radius must be positive")
    poly = sum((Polynomial.abs2(k, n, c[k]) for k in range(n)), Polynomial.const(-radius ** 2, n))
    return DomainSpec("ball", n, {"center": complex_to_json(c), "radius": float(radius)},
                      (PolynomialComponent(poly),), float(np.linalg.norm(c) + radius),
                      labels=("|z-c|^2-r^2",))


def polydisc(radii) -> DomainSpec:
    radii = [float(r) for r in radii]
    n = len(radii)
    if n < 1 or min(radii) <= 0:
        raise ValidationError("polydisc radii must be positive")
    comps = tuple(PolynomialComponent(Polynomial.abs2(k, n) - r ** 2)
                  for k, r in enumerate(radii))
    return DomainSpec("polydisc", n, {"radii": radii}, comps,
                      float(np.linalg.norm(radii)),
                      labels=tuple(f"|z{k}|^2-{r}^2" for k, r in enumerate(radii)))


def hyperbola_box(product_bound: float = 1.0, box_bound: float = 3.0) -> DomainSpec:
    """``{|xy| < product_bound, |x|, |y| < box_bound}`` in C^2."""
    if product_bound <= 0 or box_bound <= 0:
        raise ValidationError("bounds must be positive")
    comps = (ModulusComponent(2, (1, 1), product_bound),
             ModulusComponent(2, (1, 0), box_bound),
             ModulusComponent(2, (0, 1), box_bound))
    return DomainSpec("hyperbola_box", 2,
                      {"product_bound": float(product_bound), "box_bound": float(box_bound)},
                      comps, math.sqrt(2) * box_bound, labels=("|xy|-P", "|x|-B", "|y|-B"))


def cassini_polynomial(lam: float) -> Polynomial:
    """``u = |z - p|^2 |z + p|^2 - lam^4`` with ``p = (1, 0)``."""
    x2 = Polynomial.abs2(0, 2)
    y2 = Polynomial.abs2(1, 2)
    re2x = Polynomial.var(0, 2) + Polynomial.conj_var(0, 2)
    s = x2 + y2 + 1.0
    return s * s - re2x * re2x - lam ** 4


def cassini(lam: float = 1.2) -> DomainSpec:
    """``{z in C^2 : |z - p| |z + p| < lam^2}``, ``p = (1, 0)``."""
    if lam <= 0:
        raise ValidationError("lambda must be positive")
    # |x| < lam + 1 and |y| < lam on the closure
    R = math.hypot(lam + 1.0, lam)
    return DomainSpec("cassini", 2, {"lambda": float(lam)},
                      (PolynomialComponent(cassini_polynomial(lam)),), R, labels=("u",))


def planar_union(discs) -> DomainSpec:
    """Union of discs in C, ``rho = min_j (|z - c_j| - r_j)``."""
    discs = [(complex(c), float(r)) for c, r in discs]
    if not discs or min(r for _, r in discs) <= 0:
        raise ValidationError("need at least one disc with positive radius")
    comps = tuple(ModulusComponent(1, (1,), r, shift=[c]) for c, r in discs)
    R = max(abs(c) + r for c, r in discs)
    return DomainSpec("planar_union", 1,
                      {"discs": [{"center": [c.real, c.imag], "radius": r} for c, r in discs]},
                      comps, R, combine="min",
                      labels=tuple(f"|z-({c})|-{r}" for c, r in discs))


def sublevel(polys, radius: float, check_psh: bool = True, seed: int = 0) -> DomainSpec:
    """Intersection of polynomial sublevel sets ``{p_j < 0}``.

    ``radius`` must bound the domain; it cannot be derived in general.
    Pseudoconvexity is only sampled (Levi form on the enclosing box), and a
    warning is emitted when a negative Levi eigenvalue turns up.
    """
    polys = list(polys)
    if not polys:
        raise ValidationError("need at least one component")
    n = polys[0].n
    if radius <= 0:
        raise ValidationError("radius must be positive")
    d = DomainSpec("sublevel", n,
                   {"n": n, "radius": float(radius),
                    "components": [p.to_json() for p in polys]},
                   tuple(PolynomialComponent(p) for p in polys), float(radius),
                   labels=tuple(f"p{j}" for j in range(len(polys))))
    if check_psh:
        rep = psh_sample_check(d, count=512, seed=seed)
        if rep.min_eigenvalue < -1e-9:
            warnings.warn(f"defining function is not plurisubharmonic: Levi eigenvalue "
                          f"{rep.min_eigenvalue:.3g} at {rep.argmin}", stacklevel=2)
    return d


def domain_from_json(obj: dict) -> DomainSpec:
    try:
        tag = obj["tag"]
        if tag == "ball":
            c = complex_from_json(obj["center"]) if "center" in obj else np.zeros(int(obj.get("n", 2)))
            return ball(c, float(obj["radius"]))
        if tag == "polydisc":
            return polydisc(obj["radii"])
        if tag == "hyperbola_box":
            return hyperbola_box(float(obj.get("product_bound", 1.0)),
                                 float(obj.get("box_bound", 3.0)))
        if tag == "cassini":
            return cassini(float(obj["lambda"]))
        if tag == "planar_union":
            return planar_union([(complex(*d["center"]), d["radius"]) for d in obj["discs"]])
        if tag == "sublevel":
            n = int(obj["n"])
            polys = [Polynomial.from_json(p, n) for p in obj["components"]]
            return sublevel(polys, float(obj["radius"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed domain JSON: {exc!r}") from exc
    raise ValidationError(f"unknown domain tag {obj.get('tag')!r}")


def rho(d: DomainSpec, z) -> float:
    """Defining function at a single point."""
    return float(d.rho(z)[0])


def active_component(d: DomainSpec, z, tol: float = 1e-12) -> tuple[int, bool]:
    """Index of the active component and whether ``z`` sits on a switch."""
    V = d.component_values(z)[:, 0]
    order = np.argsort(V if d.combine == "min" else -V)
    switching = len(V) > 1 and abs(V[order[0]] - V[order[1]]) <= tol
    return int(order[0]), bool(switching)


def wirtinger_grad(d: DomainSpec, j: int, z) -> np.ndarray:
    """``(d rho_j / d z_k)_k`` at a point."""
    return d.components[j].wgrad(z)[0]


def levi_form(d: DomainSpec, j: int, z) -> np.ndarray:
    """``(d^2 rho_j / d z_k d zbar_l)_{kl}`` at a point."""
    return d.components[j].levi(z)[0]


@dataclass
class LeviReport:
    count: int
    min_eigenvalue: float
    argmin: np.ndarray
    per_component: dict

    def to_json(self) -> dict:
        return {"count": self.count, "min_eigenvalue": self.min_eigenvalue,
                "argmin": complex_to_json(self.argmin),
                "per_component": {str(k): v for k, v in self.per_component.items()}}


def psh_sample_check(d: DomainSpec, region=None, count: int = 1000,
                     seed: int = 0) -> LeviReport:
    """Smallest Levi eigenvalue of the active component over random samples.

    ``region`` is a pair ``(lo, hi)`` of real 2n-vectors ordered
    ``(Re z_1, Im z_1, ..., Re z_n, Im z_n)``; defaults to the enclosing box.
    Points where a component is singular are skipped.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    n = d.n
    if region is None:
        lo, hi = -d.radius * np.ones(2 * n), d.radius * np.ones(2 * n)
    else:
        lo, hi = (np.broadcast_to(np.asarray(r, float), (2 * n,)) for r in region)
    rng = np.random.default_rng(seed)
    X = lo + (hi - lo) * rng.random((count, 2 * n))
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    _, active = d.rho_active(Z)
    mins = np.full(count, np.inf)
    per = {}
    for j, comp in enumerate(d.components):
        sel = active == j
        if not np.any(sel):
            per[j] = {"active": 0, "min_eigenvalue": None}
            continue
        L = comp.levi(Z[sel])
        ok = np.all(np.isfinite(L), axis=(1, 2))
        ev = np.full(L.shape[0], np.inf)
        if np.any(ok):
            ev[ok] = np.linalg.eigvalsh(L[ok])[:, 0]
        mins[sel] = ev
        per[j] = {"active": int(sel.sum()),
                  "min_eigenvalue": float(ev.min()) if np.any(ok) else None}
    i = int(np.argmin(mins))
    return LeviReport(count, float(mins[i]), Z[i], per)


def grid_signs(d: DomainSpec, axes: tuple[int, int], extent: float, num: int = 201,
               base=None) -> tuple[np.ndarray, np.ndarray]:
    """``rho`` on a square grid in a real 2-plane through ``base``.

    Axis ``2k`` is ``Re z_k`` and ``2k + 1`` is ``Im z_k``.
    """
    n = d.n
    base = np.zeros(2 * n) if base is None else np.asarray(base, float)
    s = np.linspace(-extent, extent, num)
    U, V = np.meshgrid(s, s, indexing="ij")
    X = np.tile(base, (U.size, 1))
    X[:, axes[0]] = U.ravel()
    X[:, axes[1]] = V.ravel()
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    return s, d.rho(Z).reshape(U.shape)

