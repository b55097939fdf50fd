"""Bergman kernel backends and the adapted two-element basis.

A KernelHandle evaluates K(z, xi) together with its first-slot holomorphic
partials, second-slot antiholomorphic partials, and the mixed second
derivatives.  All evaluators broadcast: z and xi may be (n,) points or
(..., n) batches.  Derivatives are exact — rational calculus for the closed
forms, coefficient shifts for series backends — never finite differences
(finite differences appear only as a test oracle).

Backends:
  * BallKernel       — n!/pi^n (1 - <z, xi>)^(-(n+1)) on the unit ball;
                       n = 1 is the unit disc.
  * ProductKernel    — product of factor kernels on a product domain;
                       the polydisc is the n-fold product of discs.
  * LaurentAnnulusKernel — truncated Laurent series on {r < |z| < 1} with
                       analytic normalization constants.
  * NumericBasisKernel — truncated orthonormal monomial basis obtained from
                       a quadrature Gram matrix by Hermitian eigendecomposition
                       with a relative eigenvalue cutoff.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domains import Annulus, Ball, DomainSpec, Polydisc, Product, as_point
from .quadrature import QuadRule, integrate

EIG_CUTOFF = 1e-12        # relative eigenvalue cutoff for Gram orthonormalization
GRAM_EXACTNESS_RTOL = 1e-9


def hermitian_dot(z: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """<z, xi> = sum_j z_j * conj(xi_j), broadcasting over leading axes."""
    return np.sum(z * np.conjugate(xi), axis=-1)


class KernelHandle:
    """Evaluator bundle for one Bergman kernel approximation."""

    domain: DomainSpec
    backend: str
    effective_basis: int | None = None  # series backends record their true size
    closed_form: bool = False           # exact evaluator, finite off-diagonal at the boundary

    def kernel(self, z, xi) -> np.ndarray:
        raise NotImplementedError

    def dz(self, z, xi) -> np.ndarray:
        """First-slot holomorphic partials, shape (..., n)."""
        raise NotImplementedError

    def dxibar(self, z, xi) -> np.ndarray:
        """Second-slot antiholomorphic partials, shape (..., n)."""
        raise NotImplementedError

    def dz_dxibar(self, z, xi) -> np.ndarray:
        """Mixed partials d/dz_j d/dconj(xi)_k K, shape (..., n, n)."""
        raise NotImplementedError

    def diag(self, z) -> float | np.ndarray:
        """K(z, z); positive on the interior for a healthy backend."""
        val = self.kernel(z, z)
        return val.real if isinstance(val, np.ndarray) else complex(val).real

    def dlog_components(self, z, xi) -> np.ndarray:
        """d/dz_j log of the Berezin density: dlogK(z, xi) - dlogK(z, z)."""
        z = np.asarray(z, dtype=complex)
        k_off = self.kernel(z, xi)
        k_diag = self.kernel(z, z)
        return (self.dz(z, xi) / np.asarray(k_off)[..., None]
                - self.dz(z, z) / np.asarray(k_diag)[..., None])


class BallKernel(KernelHandle):
    """Closed-form kernel of the unit ball in C^n."""

    def __init__(self, dim: int = 1):
        self.domain = Ball(dim)
        self.backend = "closed-ball"
        self.closed_form = True
        self.n = dim
        self.const = math.factorial(dim) / math.pi ** dim

    def kernel(self, z, xi):
        s = 1.0 - hermitian_dot(np.asarray(z, dtype=complex), np.asarray(xi, dtype=complex))
        return self.const * s ** (-(self.n + 1))

    def dz(self, z, xi):
        z = np.asarray(z, dtype=complex)
        xi = np.asarray(xi, dtype=complex)
        s = 1.0 - hermitian_dot(z, xi)
        k = self.const * s ** (-(self.n + 1))
        return ((self.n + 1) * k / s)[..., None] * np.conjugate(xi) * np.ones_like(z)

    def dxibar(self, z, xi):
        z = np.asarray(z, dtype=complex)
        xi = np.asarray(xi, dtype=complex)
        s = 1.0 - hermitian_dot(z, xi)
        k = self.const * s ** (-(self.n + 1))
        return ((self.n + 1) * k / s)[..., None] * z * np.ones_like(xi)

    def dz_dxibar(self, z, xi):
        z = np.asarray(z, dtype=complex)
        xi = np.asarray(xi, dtype=complex)
        s = 1.0 - hermitian_dot(z, xi)
        k = self.const * s ** (-(self.n + 1))
        eye = np.eye(self.n, dtype=complex)
        t1 = ((self.n + 1) * k / s)[..., None, None] * eye
        t2 = ((self.n + 1) * (self.n + 2) * k / s ** 2)[..., None, None] \
            * (np.conjugate(xi) * np.ones_like(z))[..., :, None] \
            * (z * np.ones_like(xi))[..., None, :]
        return t1 + t2


class ProductKernel(KernelHandle):
    """Kernel of a product domain: the product of the factor kernels."""

    def __init__(self, factors: list[KernelHandle], domain: DomainSpec | None = None):
        self.factors = list(factors)
        self.domain = domain if domain is not None else Product(tuple(f.domain for f in factors))
        self.backend = "product(" + ",".join(f.backend for f in factors) + ")"
        self.closed_form = all(f.closed_form for f in factors)
        dims = [f.domain.dim for f in self.factors]
        self.slices = []
        start = 0
        for d in dims:
            self.slices.append(slice(start, start + d))
            start += d
        self.n = start

    def _split(self, pts):
        pts = np.asarray(pts, dtype=complex)
        return [pts[..., sl] for sl in self.slices]

    def kernel(self, z, xi):
        zs, xs = self._split(z), self._split(xi)
        out = self.factors[0].kernel(zs[0], xs[0])
        for f, za, xa in zip(self.factors[1:], zs[1:], xs[1:]):
            out = out * f.kernel(za, xa)
        return out

    def dz(self, z, xi):
        zs, xs = self._split(z), self._split(xi)
        ks = [f.kernel(za, xa) for f, za, xa in zip(self.factors, zs, xs)]
        total = np.prod(np.stack(np.broadcast_arrays(*ks), axis=0), axis=0) if len(ks) > 1 else ks[0]
        lead = np.asarray(total).shape
        blocks = []
        for f, za, xa, ka in zip(self.factors, zs, xs, ks):
            part = (total / ka)[..., None] * f.dz(za, xa)
            blocks.append(np.broadcast_to(part, lead + part.shape[-1:]))
        return np.concatenate(blocks, axis=-1)

    def dxibar(self, z, xi):
        zs, xs = self._split(z), self._split(xi)
        ks = [f.kernel(za, xa) for f, za, xa in zip(self.factors, zs, xs)]
        total = np.prod(np.stack(np.broadcast_arrays(*ks), axis=0), axis=0) if len(ks) > 1 else ks[0]
        lead = np.asarray(total).shape
        blocks = []
        for f, za, xa, ka in zip(self.factors, zs, xs, ks):
            part = (total / ka)[..., None] * f.dxibar(za, xa)
            blocks.append(np.broadcast_to(part, lead + part.shape[-1:]))
        return np.concatenate(blocks, axis=-1)

    def dz_dxibar(self, z, xi):
        zs, xs = self._split(z), self._split(xi)
        ks = [f.kernel(za, xa) for f, za, xa in zip(self.factors, zs, xs)]
        total = np.prod(np.stack(np.broadcast_arrays(*ks), axis=0), axis=0) if len(ks) > 1 else ks[0]
        lead = np.asarray(total).shape
        out = np.zeros(lead + (self.n, self.n), dtype=complex)
        dzs = [f.dz(za, xa) for f, za, xa in zip(self.factors, zs, xs)]
        dxs = [f.dxibar(za, xa) for f, za, xa in zip(self.factors, zs, xs)]
        for i, sli in enumerate(self.slices):
            for l, sll in enumerate(self.slices):
                if i == l:
                    mixed = self.factors[i].dz_dxibar(zs[i], xs[i])
                    out[..., sli, sll] = (total / ks[i])[..., None, None] * mixed
                else:
                    out[..., sli, sll] = (total / (ks[i] * ks[l]))[..., None, None] \
                        * dzs[i][..., :, None] * dxs[l][..., None, :]
        return out


class LaurentAnnulusKernel(KernelHandle):
    """Truncated Laurent-series kernel on the annulus {r < |z| < 1}.

    K_N(z, xi) = sum_{k=-N}^{N} z^k conj(xi)^k / c_k with the analytic
    normalizations c_k = pi (1 - r^(2k+2)) / (k+1) for k != -1 and
    c_{-1} = 2 pi log(1/r).  Evaluation outside the closed annulus shell is
    an error: the truncation is only meaningful where the series converges.
    """

    def __init__(self, r: float, truncation: int):
        if truncation < 1:
            raise ValueError("Laurent truncation must be >= 1")
        self.domain = Annulus(r)
        self.backend = f"laurent(N={truncation})"
        self.r = float(r)
        self.N = int(truncation)
        self.ks = np.arange(-self.N, self.N + 1)
        self.effective_basis = 2 * self.N + 1
        self.c = np.array([self._norm_const(int(k)) for k in self.ks])

    def _norm_const(self, k: int) -> float:
        if k == -1:
            return 2.0 * math.pi * math.log(1.0 / self.r)
        return math.pi * (1.0 - self.r ** (2 * k + 2)) / (k + 1)

    def _check(self, pts):
        t = np.abs(np.asarray(pts, dtype=complex)[..., 0])
        if np.any(t <= self.r) or np.any(t >= 1.0):
            raise ValueError("Laurent kernel evaluated outside the open annulus")

    def _series(self, z, xi, kpow: int):
        self._check(z)
        self._check(xi)
        w = np.asarray(z, dtype=complex)[..., 0] * np.conjugate(np.asarray(xi, dtype=complex)[..., 0])
        terms = w[..., None] ** self.ks / self.c
        if kpow:
            terms = terms * self.ks.astype(float) ** kpow
        return np.sum(terms, axis=-1)

    def kernel(self, z, xi):
        return self._series(z, xi, 0)

    def dz(self, z, xi):
        z0 = np.asarray(z, dtype=complex)[..., 0]
        return (self._series(z, xi, 1) / z0)[..., None]

    def dxibar(self, z, xi):
        x0 = np.conjugate(np.asarray(xi, dtype=complex)[..., 0])
        return (self._series(z, xi, 1) / x0)[..., None]

    def dz_dxibar(self, z, xi):
        z0 = np.asarray(z, dtype=complex)[..., 0]
        x0 = np.conjugate(np.asarray(xi, dtype=complex)[..., 0])
        return (self._series(z, xi, 2) / (z0 * x0))[..., None, None]


class NumericBasisKernel(KernelHandle):
    """Kernel from a quadrature-orthonormalized monomial (or Laurent) basis."""

    def __init__(self, domain: DomainSpec, exponents: np.ndarray, coeff: np.ndarray,
                 degree: int, discarded: int):
        self.domain = domain
        self.exponents = exponents          # (B, n) integer
        self.coeff = coeff                  # (B, K): phi_i = sum_a coeff[a, i] m_a
        self.degree = degree
        self.discarded = discarded
        self.effective_basis = coeff.shape[1]
        self.backend = f"numeric(degree={degree}, basis={self.effective_basis})"
        self.n = exponents.shape[1]

    def _mono(self, pts, shift_coord: int | None = None):
        pts = np.asarray(pts, dtype=complex)
        exps = self.exponents
        factor = None
        if shift_coord is not None:
            e = exps[:, shift_coord]
            factor = e.astype(complex)
            shifted = np.where(e != 0, e - 1, 0)  # clamp avoids 0**-1 at the origin
            exps = exps.copy()
            exps[:, shift_coord] = shifted
        out = np.ones(pts.shape[:-1] + (exps.shape[0],), dtype=complex)
        for j in range(self.n):
            out = out * pts[..., j, None] ** exps[:, j]
        if factor is not None:
            out = out * factor
        return out

    def _phi(self, pts, shift_coord: int | None = None):
        return self._mono(pts, shift_coord) @ self.coeff

    def kernel(self, z, xi):
        return np.sum(self._phi(z) * np.conjugate(self._phi(xi)), axis=-1)

    def dz(self, z, xi):
        pxi = np.conjugate(self._phi(xi))
        cols = [np.sum(self._phi(z, j) * pxi, axis=-1) for j in range(self.n)]
        return np.stack(np.broadcast_arrays(*cols), axis=-1)

    def dxibar(self, z, xi):
        pz = self._phi(z)
        cols = [np.sum(pz * np.conjugate(self._phi(xi, k)), axis=-1) for k in range(self.n)]
        return np.stack(np.broadcast_arrays(*cols), axis=-1)

    def dz_dxibar(self, z, xi):
        dpz = [self._phi(z, j) for j in range(self.n)]
        dpx = [np.conjugate(self._phi(xi, k)) for k in range(self.n)]
        rows = []
        for j in range(self.n):
            rows.append(np.stack(
                np.broadcast_arrays(*[np.sum(dpz[j] * dpx[k], axis=-1) for k in range(self.n)]),
                axis=-1))
        return np.stack(np.broadcast_arrays(*rows), axis=-2)


def closed_form_kernel(domain: DomainSpec) -> KernelHandle:
    """Exact kernel for balls, polydiscs, and products of closed-form factors."""
    if isinstance(domain, Ball):
        return BallKernel(domain.dim)
    if isinstance(domain, Polydisc):
        return ProductKernel([BallKernel(1) for _ in range(domain.dim)], domain=domain)
    if isinstance(domain, Product):
        return ProductKernel([closed_form_kernel(f) for f in domain.factors], domain=domain)
    raise ValueError(f"no closed-form kernel for domain kind {domain.kind!r}")


def laurent_kernel(domain: Annulus, truncation: int) -> LaurentAnnulusKernel:
    if not isinstance(domain, Annulus):
        raise ValueError("the Laurent backend is only defined on an annulus")
    return LaurentAnnulusKernel(domain.r, truncation)


def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    """All multi-indices of total degree <= degree, graded-lexicographic."""
    out = [e for e in itertools.product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    out.sort(key=lambda e: (sum(e), e))
    return np.array(out, dtype=int)


def monomial_l2_norm_sq(domain: DomainSpec, alpha) -> float | None:
    """Analytic value of int |z^alpha|^2 dV when the domain admits one."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=int))
    if isinstance(domain, Ball):
        n, tot = domain.dim, int(np.sum(alpha))
        num = math.pi ** n * math.prod(math.factorial(int(a)) for a in alpha)
        return num / math.factorial(n + tot)
    if isinstance(domain, Polydisc):
        return math.prod(math.pi / (int(a) + 1) for a in alpha)
    if isinstance(domain, Annulus):
        k = int(alpha[0])
        if k == -1:
            return 2.0 * math.pi * math.log(1.0 / domain.r)
        return math.pi * (1.0 - domain.r ** (2 * k + 2)) / (k + 1)
    if isinstance(domain, Product):
        val, start = 1.0, 0
        for f in domain.factors:
            part = monomial_l2_norm_sq(f, alpha[start:start + f.dim])
            if part is None:
                return None
            val *= part
            start += f.dim
        return val
    return None


def numeric_kernel(domain: DomainSpec, rule: QuadRule, degree: int) -> NumericBasisKernel:
    """Truncated orthonormal-basis kernel from a quadrature Gram matrix.

    Monomials of total degree <= degree (Laurent exponents -degree..degree on
    an annulus) are orthonormalized through a Hermitian eigendecomposition of
    the Gram matrix with relative eigenvalue cutoff 1e-12; directions below
    the cutoff are discarded and the effective basis size is recorded on the
    handle.  Where an analytic monomial norm exists, the Gram diagonal is
    checked against it and a too-coarse rule is an error.
    """
    if rule.domain != domain:
        raise ValueError("quadrature rule was built on a different domain")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if isinstance(domain, Annulus):
        if degree < 1:
            raise ValueError("annulus Laurent basis needs degree >= 1")
        exps = np.arange(-degree, degree + 1, dtype=int)[:, None]
    else:
        exps = monomial_exponents(domain.dim, degree)
    B = exps.shape[0]

    gram = np.zeros((B, B), dtype=complex)
    chunk = 1 << 16
    for start in range(0, len(rule), chunk):
        sl = slice(start, start + chunk)
        pts = rule.nodes[sl]
        v = np.ones((pts.shape[0], B), dtype=complex)
        for j in range(exps.shape[1]):
            v = v * pts[:, j, None] ** exps[:, j]
        gram += v.T @ (rule.weights[sl][:, None] * np.conjugate(v))
    gram = 0.5 * (gram + gram.conj().T)

    for idx in range(B):  # diagonal exactness check against analytic norms
        target = monomial_l2_norm_sq(domain, exps[idx])
        if target is None:
            break
        if abs(gram[idx, idx].real - target) > GRAM_EXACTNESS_RTOL * target:
            raise ValueError(
                f"rule too coarse for degree {degree}: Gram diagonal for exponent "
                f"{exps[idx].tolist()} is {gram[idx, idx].real:.6e}, expected {target:.6e}")

    evals, evecs = np.linalg.eigh(gram)
    keep = evals > EIG_CUTOFF * float(evals[-1])
    discarded = int(B - np.count_nonzero(keep))
    coeff = np.conjugate(evecs[:, keep]) / np.sqrt(evals[keep])
    return NumericBasisKernel(domain=domain, exponents=exps, coeff=coeff,
                              degree=degree, discarded=discarded)


@dataclass
class BasisPair:
    """First two elements of an orthonormal basis adapted to (z0, X).

    s0 spans the evaluation functional at z0, s1 the X-derivative functional
    inside the hyperplane {f(z0) = 0}; together they pin down K(z0, z0) and
    the metric value g(X, X) through |s0(z0)|^2 and |d_X s1(z0)|^2/|s0(z0)|^2.
    """

    s0: Callable[[np.ndarray], np.ndarray]
    s1: Callable[[np.ndarray], np.ndarray]
    base: np.ndarray
    direction: np.ndarray
    s0_sq_at_base: float      # = K(z0, z0)
    ds1_at_base: float        # = d_X s1 (z0), real positive by construction
    metric_value: float       # = |d_X s1(z0)|^2 / |s0(z0)|^2

    def orthonormality_residuals(self, rule: QuadRule) -> dict[str, float]:
        """Quadrature residuals for the unit-norm / orthogonality contracts."""
        n00 = integrate(rule, lambda p: self.s0(p) * np.conjugate(self.s0(p)))
        n11 = integrate(rule, lambda p: self.s1(p) * np.conjugate(self.s1(p)))
        n01 = integrate(rule, lambda p: self.s0(p) * np.conjugate(self.s1(p)))
        return {
            "norm_s0": abs(n00.real - 1.0),
            "norm_s1": abs(n11.real - 1.0),
            "inner_s0_s1": abs(n01),
            "s1_at_base": float(abs(complex(np.asarray(self.s1(self.base))))),
        }


def special_basis(kernel: KernelHandle, z0, X, rule: QuadRule | None = None) -> BasisPair:
    """Adapted orthonormal pair (s0, s1) at z0 in direction X.

    Inner products are computed exactly through the reproducing identities of
    the backend's own kernel (valid for truncated backends too, which
    reproduce their own span); `rule` is kept for residual reporting via
    BasisPair.orthonormality_residuals.
    """
    z0 = as_point(z0, kernel.domain.dim)
    X = as_point(X, kernel.domain.dim)
    if np.all(X == 0):
        raise ValueError("direction X must be nonzero")

    k00 = float(kernel.diag(z0))
    if k00 <= 0:
        raise ValueError("kernel not positive on the diagonal: backend failure")
    sqrt_k00 = math.sqrt(k00)

    # representer of the d_X evaluation functional: t = sum_k conj(X_k) dxibar_k K(., z0)
    xbar = np.conjugate(X)
    dz00 = kernel.dz(z0, z0)
    mixed00 = kernel.dz_dxibar(z0, z0)
    ds0 = complex(np.sum(X * dz00)) / sqrt_k00           # d_X s0 (z0)
    t_norm_sq = float(np.real(np.einsum("j,jk,k->", X, mixed00, xbar)))
    u_norm_sq = t_norm_sq - abs(ds0) ** 2
    if u_norm_sq <= 1e-14 * max(t_norm_sq, 1.0):
        raise RuntimeError("derivative representer degenerate against s0: "
                           "internal inconsistency (metric should be positive definite)")
    u_norm = math.sqrt(u_norm_sq)
    proj = np.conjugate(ds0)                              # <t, s0>

    def s0(p):
        return kernel.kernel(p, z0) / sqrt_k00

    def s1(p):
        t_val = np.sum(kernel.dxibar(p, z0) * xbar, axis=-1)
        return (t_val - proj * kernel.kernel(p, z0) / sqrt_k00) / u_norm

    return BasisPair(s0=s0, s1=s1, base=z0, direction=X,
                     s0_sq_at_base=k00, ds1_at_base=u_norm,
                     metric_value=u_norm_sq / k00)


def separates_points_check(kernel: KernelHandle, z1, z2, rtol: float = 1e-10) -> bool:
    """True iff |K(z1,z2)|^2 differs from K(z1,z1)K(z2,z2) beyond rtol."""
    z1 = as_point(z1, kernel.domain.dim)
    z2 = as_point(z2, kernel.domain.dim)
    off = abs(complex(np.asarray(kernel.kernel(z1, z2)))) ** 2
    diag = float(kernel.diag(z1)) * float(kernel.diag(z2))
    return abs(off - diag) > rtol * abs(diag)
