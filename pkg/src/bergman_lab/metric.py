"""The Bergman metric tensor and its associated linear algebra.

The metric at z is the complex Hessian of log K(z, z), assembled through the
quotient formula (K * dd''K - dK * d''K) / K^2 from the kernel handle's exact
derivatives; differentiating the logarithm numerically would suffer
catastrophic cancellation where K is small.  Inverse and Hermitian square
root are obtained from one eigendecomposition, taking the positive branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import TangentVector, as_point, direction_of
from .kernels import KernelHandle

HERMITICITY_RTOL = 1e-12


@dataclass(frozen=True)
class MetricTensor:
    """Hermitian positive-definite metric matrix at one point, with inverse and inverse square root."""

    point: np.ndarray
    matrix: np.ndarray        # g[j, k] = d/dz_j d/dconj(z)_k log K(z, z)
    inverse: np.ndarray
    sqrt_inverse: np.ndarray  # Hermitian h with h @ h = inverse
    eigenvalues: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def metric_at(kernel: KernelHandle, z) -> MetricTensor:
    """Bergman metric tensor of `kernel` at the interior point z."""
    z = as_point(z, kernel.domain.dim)
    k = float(kernel.diag(z))
    if k <= 0:
        raise ValueError(f"K(z, z) = {k} <= 0 at {z.tolist()}: backend failure")
    dz = kernel.dz(z, z)
    dxb = kernel.dxibar(z, z)
    mixed = kernel.dz_dxibar(z, z)
    g = (k * mixed - np.outer(dz, dxb)) / k ** 2

    asym = np.linalg.norm(g - g.conj().T)
    if asym > HERMITICITY_RTOL * max(np.linalg.norm(g), 1e-300) * 10:
        raise RuntimeError(f"metric matrix not Hermitian (residual {asym:.2e}): backend bug")
    g = 0.5 * (g + g.conj().T)

    evals, evecs = np.linalg.eigh(g)
    if evals[0] <= 0:
        raise ValueError(
            f"metric not positive definite at {z.tolist()} (min eigenvalue {evals[0]:.3e}); "
            "series truncation too coarse?")
    inv = (evecs / evals) @ evecs.conj().T
    sqrt_inv = (evecs / np.sqrt(evals)) @ evecs.conj().T
    return MetricTensor(point=z, matrix=g, inverse=inv, sqrt_inverse=sqrt_inv,
                        eigenvalues=evals)


def _check_base(G: MetricTensor, X) -> np.ndarray:
    if isinstance(X, TangentVector):
        if not np.allclose(X.base, G.point, rtol=0, atol=1e-12):
            raise ValueError("tangent vector based at a different point than the metric")
        return X.dir
    return direction_of(X)


def metric_pair(G: MetricTensor, X, Y) -> complex:
    """Hermitian pairing g(X, Y) = sum g_jk X_j conj(Y_k)."""
    Xd = _check_base(G, X)
    Yd = _check_base(G, Y)
    if Xd.shape[0] != G.dim or Yd.shape[0] != G.dim:
        raise ValueError("direction length does not match the metric dimension")
    return complex(np.einsum("j,jk,k->", Xd, G.matrix, np.conjugate(Yd)))


def metric_norm_sq(G: MetricTensor, X) -> float:
    """g(X, X) as a nonnegative real."""
    return max(metric_pair(G, X, X).real, 0.0)


def oneform_norm(G: MetricTensor, eta) -> float:
    """Squared dual norm of the (1,0)-form with components eta: eta^H g^{-1} eta."""
    eta = as_point(eta, G.dim)
    val = np.einsum("j,jk,k->", np.conjugate(eta), G.inverse, eta)
    return max(float(val.real), 0.0)


def finite_difference_check(kernel: KernelHandle, z, h: float = 1e-4) -> float:
    """Max entrywise gap between metric_at and a central-difference Hessian of log K(z, z).

    Test oracle only; requires interior margin > 2h around z.
    """
    z = as_point(z, kernel.domain.dim)
    n = z.shape[0]
    if not kernel.domain.contains(z, margin=2 * h):
        raise ValueError("finite-difference stencil leaves the domain")

    def logk(x: np.ndarray) -> float:
        p = x[:n] + 1j * x[n:]
        return np.log(float(kernel.diag(p)))

    x0 = np.concatenate([z.real, z.imag])
    m = 2 * n
    hess = np.empty((m, m))
    for a in range(m):
        ea = np.zeros(m)
        ea[a] = h
        hess[a, a] = (logk(x0 + ea) - 2.0 * logk(x0) + logk(x0 - ea)) / h ** 2
        for b in range(a + 1, m):
            eb = np.zeros(m)
            eb[b] = h
            v = (logk(x0 + ea + eb) - logk(x0 + ea - eb)
                 - logk(x0 - ea + eb) + logk(x0 - ea - eb)) / (4.0 * h ** 2)
            hess[a, b] = hess[b, a] = v

    # d/dz_j d/dconj(z)_k = (1/4)[(H_xx + H_yy) + i (H_xy - H_yx)]
    hxx, hyy = hess[:n, :n], hess[n:, n:]
    hxy, hyx = hess[:n, n:], hess[n:, :n]
    fd = 0.25 * ((hxx + hyy) + 1j * (hxy - hyx))
    exact = metric_at(kernel, z).matrix
    return float(np.max(np.abs(fd - exact)))
