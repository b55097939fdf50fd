"""Gradient norms of the log Berezin density and the representative map.

The squared metric gradient norm F(w, zeta) = |dlog P(w, zeta)|_g^2 equals
the Euclidean norm squared of the representative map based at w — two routes
through the same kernel (first-slot holomorphic derivatives against the
metric inverse versus second-slot antiholomorphic derivatives against the
Hermitian root) that must agree, which is what rep_equality_check measures.
On the ball and polydisc the value is constant (dim + 1, resp. 2 * dim) as
soon as zeta sits on the sphere, resp. the distinguished torus; interior
values stay strictly below it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domains import Ball, Polydisc, as_point
from .kernels import KernelHandle
from .maps import MapSpec
from .metric import metric_at, oneform_norm
from .schwarz import analytic_gradient_sup

KERNEL_ZERO_FLOOR = 1e-300
NUMERIC_BOUNDARY_EPS = 1e-4


def _log_derivative_first_slot(kernel: KernelHandle, w: np.ndarray, zeta) -> np.ndarray:
    k_off = np.asarray(kernel.kernel(w, zeta))
    if np.any(np.abs(k_off) ** 2 < KERNEL_ZERO_FLOOR):
        raise ValueError(f"kernel vanishes at ({w.tolist()}, {np.asarray(zeta).tolist()}): "
                         "log-gradient undefined there")
    return kernel.dlog_components(w, zeta)


def grad_logP_norm(kernel: KernelHandle, w, zeta) -> float:
    """Squared metric norm of the z-gradient of log P(w, zeta).

    w must be interior; zeta may sit on the boundary for closed-form
    backends, whose off-diagonal kernel stays finite there.
    """
    w = as_point(w, kernel.domain.dim)
    if not kernel.domain.contains(w):
        raise ValueError(f"base point {w.tolist()} is not interior")
    zeta = as_point(zeta, kernel.domain.dim)
    eta = _log_derivative_first_slot(kernel, w, zeta)
    return oneform_norm(metric_at(kernel, w), eta)


@dataclass(frozen=True)
class RepImage:
    """Image of one point under the representative map based at z0."""

    base: np.ndarray
    target: np.ndarray
    b: np.ndarray

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.b) ** 2))


def representative_map(kernel: KernelHandle, z0, xi) -> RepImage:
    """b_j(xi) = h_kj(z0) * [d/dconj(z)_k log K(xi, z) - d/dconj(z)_k log K(z, z)]_{z=z0},

    with h the Hermitian square root of the inverse metric at z0.  The
    second-slot antiholomorphic kernel derivatives supply the bracket; a
    kernel zero at (xi, z0) makes the logarithm undefined and is an error.
    """
    z0 = as_point(z0, kernel.domain.dim)
    xi = as_point(xi, kernel.domain.dim)
    if not kernel.domain.contains(z0):
        raise ValueError(f"base point {z0.tolist()} is not interior")
    k_off = complex(np.asarray(kernel.kernel(xi, z0)))
    if abs(k_off) ** 2 < KERNEL_ZERO_FLOOR:
        raise ValueError(f"kernel vanishes at ({xi.tolist()}, {z0.tolist()}): "
                         "representative map undefined there")
    k_diag = float(kernel.diag(z0))
    v = kernel.dxibar(xi, z0) / k_off - kernel.dxibar(z0, z0) / k_diag
    h = metric_at(kernel, z0).sqrt_inverse
    return RepImage(base=z0, target=xi, b=h.T @ v)


def rep_equality_check(kernel: KernelHandle, z0, xi) -> float:
    """|grad_logP_norm(z0, xi) - |rep_{z0}(xi)|^2|, the two-route residual."""
    return abs(grad_logP_norm(kernel, z0, xi) - representative_map(kernel, z0, xi).norm_sq)


def invariance_check(phi: MapSpec, kernel1: KernelHandle, kernel2: KernelHandle,
                     z, xi) -> float:
    """Residual of gradient-norm invariance under a certified biholomorphism.

    Only the package's certified automorphisms (identity, coordinate-wise
    Moebius) are accepted; bijectivity of arbitrary maps cannot be verified.
    """
    if not phi.certified_automorphism:
        raise ValueError("only certified biholomorphisms (coordinate-wise Moebius) are accepted")
    z = as_point(z, kernel1.domain.dim)
    xi = as_point(xi, kernel1.domain.dim)
    f1 = grad_logP_norm(kernel1, z, xi)
    f2 = grad_logP_norm(kernel2, phi(z), phi(xi))
    return abs(f1 - f2)


@dataclass(frozen=True)
class BoundaryScan:
    """Gradient norms against a fixed boundary point over an interior grid."""

    expected: float
    values: np.ndarray
    max_deviation: float
    exact_boundary: bool   # False when a series backend substituted radius 1 - eps


def boundary_constancy_scan(kernel: KernelHandle, xi0, interior_points) -> BoundaryScan:
    """Scan |dlog P(z, xi0)|_g^2 over interior z for a boundary anchor xi0.

    For the ball xi0 must lie on the unit sphere (expected value dim + 1);
    for the polydisc on the distinguished torus |xi0_j| = 1 (expected 2*dim).
    Closed-form backends evaluate at the boundary exactly; series backends
    pull xi0 to radius 1 - 1e-4 and the scan reports the trend only.
    """
    domain = kernel.domain
    xi0 = as_point(xi0, domain.dim)
    if isinstance(domain, Ball):
        if abs(np.linalg.norm(xi0) - 1.0) > 1e-12:
            raise ValueError("xi0 must lie on the unit sphere")
    elif isinstance(domain, Polydisc):
        if np.any(np.abs(np.abs(xi0) - 1.0) > 1e-12):
            raise ValueError("xi0 must lie on the distinguished boundary (all |xi0_j| = 1)")
    else:
        raise ValueError("boundary constancy is defined on balls and polydiscs")
    expected = analytic_gradient_sup(domain)

    exact = kernel.closed_form
    anchor = xi0 if exact else (1.0 - NUMERIC_BOUNDARY_EPS) * xi0
    pts = np.atleast_2d(np.asarray(interior_points, dtype=complex))
    values = np.array([grad_logP_norm(kernel, z, anchor) for z in pts])
    return BoundaryScan(expected=float(expected), values=values,
                        max_deviation=float(np.max(np.abs(values - expected))),
                        exact_boundary=exact)
