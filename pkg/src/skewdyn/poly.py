"""Complex polynomial and skew-product algebra.

Dense-coefficient univariate polynomials, bivariate polynomials in (z, w),
and the skew product f(z, w) = (p(z), q(z, w)) with a regularity check
(equal degrees and a constant nonzero top w-coefficient, so the map
extends to the projective plane).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.polynomial.polynomial as npoly

__all__ = [
    "Poly1",
    "Poly2",
    "SkewProduct",
    "RootFindError",
    "eval_skew",
    "check_regular",
    "fiber_poly",
    "roots",
    "compose_fiber",
    "poly1_to_text",
    "poly1_from_text",
    "poly2_to_text",
    "poly2_from_text",
    "skew_to_text",
    "skew_from_text",
]

COMPOSE_DEGREE_CAP = 4096


def _trim(c):
    c = np.asarray(c, dtype=complex)
    if c.ndim == 0:
        c = c.reshape(1)
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1].copy()


@dataclass(frozen=True)
class Poly1:
    """Univariate complex polynomial, coeffs[j] multiplying the j-th power."""

    coeffs: np.ndarray

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", _trim(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, w):
        return npoly.polyval(w, self.coeffs)

    def deriv(self) -> "Poly1":
        if self.degree == 0:
            return Poly1([0.0])
        return Poly1(npoly.polyder(self.coeffs))

    def compose(self, inner: "Poly1") -> "Poly1":
        # Horner over polynomial arguments: result = sum a_j * inner^j
        acc = np.array([self.coeffs[-1]], dtype=complex)
        for a in self.coeffs[-2::-1]:
            acc = npoly.polymul(acc, inner.coeffs)
            acc = npoly.polyadd(acc, [a])
        return Poly1(acc)

    def __add__(self, other: "Poly1") -> "Poly1":
        return Poly1(npoly.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other: "Poly1") -> "Poly1":
        return Poly1(npoly.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other: "Poly1") -> "Poly1":
        return Poly1(npoly.polymul(self.coeffs, other.coeffs))

    @staticmethod
    def from_roots(rts, leading=1.0) -> "Poly1":
        c = npoly.polyfromroots(np.asarray(rts, dtype=complex))
        return Poly1(c * complex(leading))

    def iterate(self, z, n: int):
        """n-fold forward image of z (scalar or array) under this polynomial."""
        for _ in range(n):
            z = self(z)
        return z


@dataclass(frozen=True)
class Poly2:
    """Bivariate complex polynomial, coeffs[i, j] multiplying z^i w^j."""

    coeffs: np.ndarray

    def __init__(self, coeffs):
        c = np.atleast_2d(np.asarray(coeffs, dtype=complex)).copy()
        object.__setattr__(self, "coeffs", c)

    @property
    def total_degree(self) -> int:
        nz = np.argwhere(self.coeffs != 0)
        if len(nz) == 0:
            return 0
        return int((nz[:, 0] + nz[:, 1]).max())

    @property
    def w_degree(self) -> int:
        nz = np.argwhere(self.coeffs != 0)
        if len(nz) == 0:
            return 0
        return int(nz[:, 1].max())

    def __call__(self, z, w):
        # Horner in w of the z-evaluated coefficient functions.
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        acc = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        for j in range(self.coeffs.shape[1] - 1, -1, -1):
            acc = acc * w + npoly.polyval(z, self.coeffs[:, j])
        return acc if acc.shape else complex(acc)

    def dw(self) -> "Poly2":
        """Partial derivative in w."""
        c = self.coeffs
        if c.shape[1] == 1:
            return Poly2(np.zeros((1, 1)))
        j = np.arange(1, c.shape[1])
        return Poly2(c[:, 1:] * j[None, :])


@dataclass(frozen=True)
class SkewProduct:
    """The map f(z, w) = (p(z), q(z, w)) with matching degree d."""

    p: Poly1
    q: Poly2
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def degree(self) -> int:
        return self.p.degree


def check_regular(f: SkewProduct):
    """Check regularity of a skew product.

    Returns (ok, diagnostic).  Regular means deg p = total degree of q = d
    with d >= 2 and the w^d coefficient of q a nonzero constant in z, which
    is the implementable criterion for extension to the projective plane.
    """
    d = f.p.degree
    if d < 2:
        return False, f"base degree {d} < 2"
    td = f.q.total_degree
    if td != d:
        return False, f"total degree of q is {td}, base degree is {d}"
    c = f.q.coeffs
    if c.shape[1] <= d or c[0, d] == 0:
        return False, "w^d coefficient of q is zero"
    if c.shape[1] > d and np.any(c[1:, d:] != 0):
        return False, "w^d coefficient of q depends on z"
    return True, "regular"


def eval_skew(f: SkewProduct, x):
    """Apply f = (p(z), q(z, w)) to the point x = (z, w)."""
    z, w = x
    return f.p(z), f.q(z, w)


def fiber_poly(f: SkewProduct, z) -> Poly1:
    """The one-variable fiber map w -> q(z, w) over base point z."""
    z = complex(z)
    return Poly1(npoly.polyval(z, f.q.coeffs))


def compose_fiber(f: SkewProduct, z, n: int, cap: int = COMPOSE_DEGREE_CAP) -> Poly1:
    """Explicit coefficients of the n-step fiber composition over z.

    Chains the fiber maps along the base orbit z, p(z), ..., p^{n-1}(z).
    Fails if the resulting degree d^n exceeds `cap` (coefficient blowup);
    callers should fall back to pointwise orbit evaluation.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = f.degree
    if d**n > cap:
        raise ValueError(
            f"composed degree {d}^{n} exceeds cap {cap}; evaluate pointwise instead"
        )
    z = complex(z)
    comp = fiber_poly(f, z)
    for _ in range(n - 1):
        z = complex(f.p(z))
        comp = fiber_poly(f, z).compose(comp)
    return comp


class RootFindError(RuntimeError):
    def __init__(self, msg, residuals=None, best=None):
        super().__init__(msg)
        self.residuals = residuals
        self.best = best


def _aberth(coeffs, tol, max_iter=300, seed=0):
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    cm = c / c[-1]
    # Cauchy bound for the root modulus
    bound = 1.0 + np.max(np.abs(cm[:-1]))
    rng = np.random.default_rng(seed)
    k = np.arange(n)
    ang = 2 * np.pi * k / n + 0.4 + 0.05 * rng.standard_normal(n)
    x = bound * np.exp(1j * ang) * (1 + 0.01 * rng.standard_normal(n))
    dc = npoly.polyder(cm)
    scale = max(np.max(np.abs(c)), 1.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(max_iter):
            pv = npoly.polyval(x, cm)
            if np.all(np.abs(pv) * np.abs(c[-1]) <= tol * scale):
                return x
            dv = npoly.polyval(x, dc)
            dv = np.where(dv == 0, 1e-300, dv)
            newt = pv / dv
            diff = x[:, None] - x[None, :]
            np.fill_diagonal(diff, np.inf)
            s = np.nansum(1.0 / diff, axis=1)
            denom = 1.0 - newt * s
            denom = np.where(np.abs(denom) < 1e-300, 1e-300, denom)
            x = x - newt / denom
            if not np.all(np.isfinite(x)):
                return None
    return None


def roots(poly: Poly1, tol: float = 1e-10) -> np.ndarray:
    """All complex roots of the polynomial, with multiplicity.

    Simultaneous-iteration (Aberth-Ehrlich) solver with a companion-matrix
    eigenvalue fallback; each returned root r satisfies
    |poly(r)| <= tol * coefficient scale (after a Newton polish).
    Raises RootFindError when neither method meets the residual bound.
    """
    c = _trim(poly.coeffs)
    n = len(c) - 1
    if n < 1:
        raise ValueError("degree must be >= 1")
    # peel off roots at the origin
    lead_zeros = 0
    while c[lead_zeros] == 0 and lead_zeros < n:
        lead_zeros += 1
    core = c[lead_zeros:]
    m = len(core) - 1
    out = [0.0 + 0.0j] * lead_zeros
    if m >= 1:
        if m == 1:
            x = np.array([-core[0] / core[1]])
        else:
            x = _aberth(core, tol)
            if x is None:
                comp = npoly.polycompanion(core / core[-1])
                x = np.linalg.eigvals(comp)
            # Newton polish
            dc = npoly.polyder(core)
            for _ in range(4):
                dv = npoly.polyval(x, dc)
                dv = np.where(dv == 0, 1e-300, dv)
                x = x - npoly.polyval(x, core) / dv
        scale = max(float(np.max(np.abs(c))), 1.0)
        res = np.abs(npoly.polyval(x, core))
        if np.any(res > tol * scale * max(1.0, float(np.max(np.abs(x))) ** m)):
            comp = npoly.polycompanion(core / core[-1])
            x2 = np.linalg.eigvals(comp)
            res2 = np.abs(npoly.polyval(x2, core))
            if np.max(res2) < np.max(res):
                x, res = x2, res2
            if np.any(res > tol * scale * max(1.0, float(np.max(np.abs(x))) ** m)):
                raise RootFindError(
                    "root solve failed to meet residual bound",
                    residuals=res,
                    best=x,
                )
        out.extend(x.tolist())
    arr = np.array(out, dtype=complex)
    return arr[np.lexsort((arr.imag, arr.real))]


# -- text serialization: one `j re im` line per nonzero Poly1 coefficient,
#    `i j re im` for Poly2, 17 significant digits for exact round-trip.

def poly1_to_text(p: Poly1) -> str:
    lines = []
    for j, c in enumerate(p.coeffs):
        if c != 0 or j == len(p.coeffs) - 1:
            lines.append(f"{j} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


def poly1_from_text(text: str) -> Poly1:
    entries = {}
    for line in text.strip().splitlines():
        parts = line.split()
        if not parts:
            continue
        j, re, im = int(parts[0]), float(parts[1]), float(parts[2])
        entries[j] = complex(re, im)
    c = np.zeros(max(entries) + 1, dtype=complex)
    for j, v in entries.items():
        c[j] = v
    return Poly1(c)


def poly2_to_text(q: Poly2) -> str:
    lines = []
    for (i, j), c in np.ndenumerate(q.coeffs):
        if c != 0:
            lines.append(f"{i} {j} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


def poly2_from_text(text: str) -> Poly2:
    entries = {}
    for line in text.strip().splitlines():
        parts = line.split()
        if not parts:
            continue
        i, j, re, im = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
        entries[(i, j)] = complex(re, im)
    ni = max(k[0] for k in entries) + 1
    nj = max(k[1] for k in entries) + 1
    c = np.zeros((ni, nj), dtype=complex)
    for (i, j), v in entries.items():
        c[i, j] = v
    return Poly2(c)


def skew_to_text(f: SkewProduct) -> str:
    return "[p]\n" + poly1_to_text(f.p) + "[q]\n" + poly2_to_text(f.q)


def skew_from_text(text: str) -> SkewProduct:
    parts = text.split("[q]")
    ptxt = parts[0].replace("[p]", "")
    return SkewProduct(p=poly1_from_text(ptxt), q=poly2_from_text(parts[1]))
