"""The Berezin density and moments of functions under it.

For each interior z the density P(z, .) = |K(z, .)|^2 / K(z, z) is a
probability density on the domain, and z -> P(z, .) dV is a statistical
model whose Fisher information pullback reproduces the Bergman metric.
Moments are computed by quadrature with a two-pass (mean-subtracted)
covariance; every moment carries a refinement-based error estimate because
the identities being checked assume exact integrals.

Quadrature nodes where the density underflows (possible off-diagonal kernel
zeros, e.g. on an annulus) are skipped for log-type integrands and counted:
the integrands Z * P vanish there and the moments are defined almost
everywhere against P.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .domains import as_point, direction_of
from .kernels import KernelHandle
from .metric import metric_at, metric_norm_sq
from .quadrature import QuadRule, pairwise_sum

log = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-300
VAR_NEGATIVE_TOL = 1e-12
_CHUNK = 1 << 16


@dataclass(frozen=True)
class MomentResult:
    """One moment value plus its quadrature-refinement error estimate."""

    value: complex
    quad_error_estimate: float
    skipped_nodes: int = 0
    cross_check: float | None = None   # |two-pass - naive| for (co)variances
    mean: complex | None = None        # underlying mean, for variance results


@dataclass(frozen=True)
class BerezinDensity:
    """Berezin density evaluators bound to one kernel backend."""

    kernel: KernelHandle

    @property
    def domain(self):
        return self.kernel.domain

    def density(self, z, xi) -> np.ndarray:
        """P(z, xi) = |K(z, xi)|^2 / K(z, z), nonnegative; batched in xi."""
        z = as_point(z, self.domain.dim)
        kzz = float(self.kernel.diag(z))
        if kzz <= 0:
            raise ValueError(f"K(z, z) = {kzz} <= 0 at {z.tolist()}")
        off = self.kernel.kernel(z, xi)
        return (off * np.conjugate(off)).real / kzz

    def dlog_dir(self, z, X, xi) -> np.ndarray:
        """d_X log P(z, xi) in the z-slot, from exact kernel derivatives.

        Raises where the density vanishes (log singularity), naming xi.
        """
        z = as_point(z, self.domain.dim)
        Xd = direction_of(X)
        xi_arr = np.asarray(xi, dtype=complex)
        dens = self.density(z, xi_arr)
        if np.any(dens < DENSITY_FLOOR):
            where = np.asarray(dens < DENSITY_FLOOR)
            bad = xi_arr if where.ndim == 0 else xi_arr[where][0]
            raise ValueError(f"log P singular: density vanishes at xi = {np.atleast_1d(bad).tolist()}")
        return self._dlog_dir_unchecked(z, Xd, xi_arr)

    def _dlog_dir_unchecked(self, z, Xd, xi):
        comps = self.kernel.dlog_components(z, xi)
        return np.sum(comps * Xd, axis=-1)


def density(P: BerezinDensity, z, xi) -> float:
    return float(np.asarray(P.density(z, xi)))


def dlogP(P: BerezinDensity, z, X, xi) -> complex:
    return complex(np.asarray(P.dlog_dir(z, X, xi)))


def _collect(P: BerezinDensity, rule: QuadRule, z, fns) -> tuple[np.ndarray, list, int]:
    """One pass over the rule: weight * density per node, plus each fn's values.

    Functions are evaluated only where the density is alive (>= the floor);
    masked nodes contribute zero, matching the almost-everywhere semantics of
    the moments.  Evaluation is chunked to bound intermediate memory.
    """
    z = as_point(z, P.domain.dim)
    m = len(rule)
    wdens = np.zeros(m)
    vals = [np.zeros(m, dtype=complex) for _ in fns]
    skipped = 0
    for start in range(0, m, _CHUNK):
        sl = slice(start, min(start + _CHUNK, m))
        pts = rule.nodes[sl]
        dens = P.density(z, pts)
        alive = dens >= DENSITY_FLOOR
        skipped += int(pts.shape[0] - np.count_nonzero(alive))
        wd = np.zeros(pts.shape[0])
        wd[alive] = rule.weights[sl][alive] * dens[alive]
        wdens[sl] = wd
        for i, f in enumerate(fns):
            chunk_vals = np.zeros(pts.shape[0], dtype=complex)
            if np.any(alive):
                v = np.asarray(f(pts[alive]), dtype=complex)
                bad = ~np.isfinite(v)
                if np.any(bad):
                    k = int(np.argmax(bad))
                    raise ValueError(
                        "moment integrand not finite at a node with positive density: "
                        f"{pts[alive][k].tolist()}")
                chunk_vals[alive] = v
            vals[i][sl] = chunk_vals
    if skipped:
        log.info("moment quadrature skipped %d node(s) with vanishing density", skipped)
    return wdens, vals, skipped


def expectation(P: BerezinDensity, rule: QuadRule, z, Z) -> MomentResult:
    """E[Z] under P(z, .) dV with a refinement-based error estimate."""
    wb, (vb,), skipped = _collect(P, rule, z, [Z])
    base = complex(pairwise_sum(wb * vb))
    wf, (vf,), _ = _collect(P, rule.refine(), z, [Z])
    fine = complex(pairwise_sum(wf * vf))
    return MomentResult(value=base, quad_error_estimate=abs(base - fine),
                        skipped_nodes=skipped)


def covariance(P: BerezinDensity, rule: QuadRule, z, Z, W) -> MomentResult:
    """Cov[Z, W] = E[(Z - E Z) conj(W - E W)], two-pass with a naive cross-check."""
    wb, (zb, wvb), skipped = _collect(P, rule, z, [Z, W])
    wf, (zf, wvf), _ = _collect(P, rule.refine(), z, [Z, W])
    mz = complex(pairwise_sum(wb * zb))
    mw = complex(pairwise_sum(wb * wvb))
    base = complex(pairwise_sum(wb * (zb - mz) * np.conjugate(wvb - mw)))
    fine = complex(pairwise_sum(wf * (zf - mz) * np.conjugate(wvf - mw)))
    naive = complex(pairwise_sum(wb * zb * np.conjugate(wvb))) - mz * np.conjugate(mw)
    return MomentResult(value=base, quad_error_estimate=abs(base - fine),
                        skipped_nodes=skipped, cross_check=abs(base - naive))


def variance(P: BerezinDensity, rule: QuadRule, z, Z) -> MomentResult:
    """Var[Z] >= 0 (two-pass); a real part below -1e-12 is a quadrature failure."""
    wb, (zb,), skipped = _collect(P, rule, z, [Z])
    wf, (zf,), _ = _collect(P, rule.refine(), z, [Z])
    mz = complex(pairwise_sum(wb * zb))
    db = zb - mz
    base = float(pairwise_sum(wb * (db * np.conjugate(db)).real))
    df = zf - mz
    fine = float(pairwise_sum(wf * (df * np.conjugate(df)).real))
    if base < -VAR_NEGATIVE_TOL:
        raise ValueError(f"variance came out negative ({base:.3e}): quadrature failure")
    val = max(base, 0.0)
    naive = float(pairwise_sum(wb * (zb * np.conjugate(zb)).real)) - abs(mz) ** 2
    return MomentResult(value=val, quad_error_estimate=abs(base - fine),
                        skipped_nodes=skipped, cross_check=abs(val - naive), mean=mz)


def fisher_pullback(P: BerezinDensity, rule: QuadRule, z, X) -> float:
    """Var[d_X log P(z, .)]; equals the Bergman metric value g(X, X)."""
    z = as_point(z, P.domain.dim)
    Xd = direction_of(X)
    if np.all(Xd == 0):
        raise ValueError("direction X must be nonzero")
    var = variance(P, rule, z, lambda pts: P._dlog_dir_unchecked(z, Xd, pts))
    return float(np.real(var.value))


def fisher_metric_gap(P: BerezinDensity, rule: QuadRule, z, X) -> float:
    """Relative gap between the Fisher pullback and the metric contraction."""
    g = metric_norm_sq(metric_at(P.kernel, z), direction_of(X))
    v = fisher_pullback(P, rule, z, X)
    return abs(v - g) / abs(g)


def reproducing_check(P: BerezinDensity, rule: QuadRule, z, f) -> float:
    """|f(z) - E[f]| for a holomorphic (polynomial) test function f."""
    z = as_point(z, P.domain.dim)
    ef = expectation(P, rule, z, f)
    target = complex(np.asarray(f(z[None, :]))[0]) if _accepts_batch(f, z) else complex(f(z))
    return abs(target - ef.value)


def _accepts_batch(f, z) -> bool:
    try:
        out = np.asarray(f(z[None, :]))
        return out.shape == (1,)
    except (TypeError, ValueError, IndexError):
        return False


def normalization_residual(P: BerezinDensity, rule: QuadRule, z) -> float:
    """|int P(z, .) dV - 1|."""
    wdens, _, _ = _collect(P, rule, z, [])
    return abs(complex(pairwise_sum(wdens)) - 1.0)
