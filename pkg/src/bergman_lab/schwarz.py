"""Pointwise and global Schwarz-inequality verification for holomorphic maps.

The central quantity is the variance bound c_f(z, X): the variance, under the
Berezin measure of the source at z, of the direction-X derivative of the log
target density along the map.  The pointwise inequality

    (pullback metric)^2 <= c_f(z, X) * (source metric)

is checked together with the covariance identity Cov[Z, W] = pullback,
the lambda-isometry / equality classification, the positive-semidefinite
global comparison C * g1 - f*g2 >= 0, and the Suzuki-type sufficient
condition whose constant 1/alpha feeds the same global bound.

Note on the chain rule: W differentiates the target log-density through its
first slot only — the base point moves with z, the integration variable
enters through evaluation.  Concretely W(xi) = <dlog P2 at (f(z), f(xi)),
df_z(X)>, with df from the map's exact Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .berezin import BerezinDensity, MomentResult, covariance, variance
from .domains import Annulus, Ball, DomainSpec, Polydisc, Product, as_point, direction_of
from .kernels import KernelHandle, closed_form_kernel, laurent_kernel, numeric_kernel
from .maps import MapSpec, MapError, constant_map, identity_map, mobius_automorphism
from .metric import MetricTensor, metric_at, metric_norm_sq, oneform_norm
from .quadrature import QuadRule, build_rule

VAR_CONVERGENCE_ATOL = 1e-6
VAR_CONVERGENCE_RTOL = 1e-6
PSD_EIG_TOL = -1e-8
LAMBDA_SPREAD_TOL = 1e-6
SUZUKI_GRID_TOL = 1e-10

# Moment quadrature orders chosen so closed-form moment errors stay ~1e-9 at
# desk-scale sample radii (angular aliasing decays like |z|^(2*order+1)).
_DEFAULT_ORDER_BY_DIM = {1: 36, 2: 14, 3: 6}


def default_order(domain: DomainSpec) -> int:
    if isinstance(domain, Annulus):
        return 40
    return _DEFAULT_ORDER_BY_DIM.get(domain.dim, 6)


@dataclass(frozen=True)
class DomainContext:
    """A domain with its kernel backend, quadrature rule, and Berezin density."""

    domain: DomainSpec
    kernel: KernelHandle
    rule: QuadRule
    density: BerezinDensity


def make_context(domain: DomainSpec, backend: str = "auto", order: int | None = None,
                 degree: int | None = None, truncation: int | None = None) -> DomainContext:
    """Assemble the kernel/rule/density bundle the verifier ops consume."""
    if order is None:
        order = default_order(domain)
    rule = build_rule(domain, order)
    if backend == "auto":
        backend = "laurent" if isinstance(domain, Annulus) else "closed"
    if backend == "closed":
        kernel = closed_form_kernel(domain)
    elif backend == "laurent":
        kernel = laurent_kernel(domain, truncation if truncation is not None else 15)
    elif backend == "numeric":
        if degree is None:
            raise ValueError("numeric backend needs a degree")
        kernel = numeric_kernel(domain, rule, degree)
    else:
        raise ValueError(f"unknown kernel backend {backend!r}")
    return DomainContext(domain=domain, kernel=kernel, rule=rule,
                         density=BerezinDensity(kernel))


@dataclass(frozen=True)
class SchwarzRecord:
    """One pointwise verification of the variance-bound inequality."""

    z: np.ndarray
    X: np.ndarray
    pullback: float            # f*g2 (X, X)
    base_metric: float         # g1 (X, X)
    c_f: float                 # Var[W] under the source density at z
    lhs: float                 # pullback^2
    rhs: float                 # c_f * base_metric
    slack: float               # rhs - lhs, >= -tol when the bound holds
    cov_identity_residual: float
    lambda_estimate: float
    mean_w_abs: float
    quad_error: float
    var_converged: bool


def _w_integrand(f: MapSpec, K2: KernelHandle, w0: np.ndarray, Y: np.ndarray):
    def W(pts):
        img = f(pts)
        return np.sum(K2.dlog_components(w0, img) * Y, axis=-1)
    return W


def pullback_metric(f: MapSpec, K2: KernelHandle, z, X) -> float:
    """f*g2(X, X) = g2(df(X), df(X)) at f(z); zero iff df(X) = 0."""
    z = as_point(z, f.source.dim)
    w0 = f(z)
    if not f.target.contains(w0):
        raise MapError(f"f(z) = {w0.tolist()} lies outside the target domain")
    Y = f.push_direction(z, X)
    if np.allclose(Y, 0.0, atol=0.0):
        return 0.0
    return metric_norm_sq(metric_at(K2, w0), Y)


def variance_bound(f: MapSpec, ctx1: DomainContext, ctx2: DomainContext, z, X) -> MomentResult:
    """Var[W] under the source density at z; its mean rides along in the result."""
    z = as_point(z, f.source.dim)
    f.check_rule(ctx1.rule)
    w0 = f(z)
    if not f.target.contains(w0):
        raise MapError(f"f(z) = {w0.tolist()} lies outside the target domain")
    Y = f.push_direction(z, as_point(X, f.source.dim))
    W = _w_integrand(f, ctx2.kernel, w0, Y)
    return variance(ctx1.density, ctx1.rule, z, W)


def variance_converged(res: MomentResult) -> bool:
    limit = max(VAR_CONVERGENCE_ATOL, VAR_CONVERGENCE_RTOL * abs(res.value))
    return res.quad_error_estimate <= limit


def verify_pointwise(f: MapSpec, ctx1: DomainContext, ctx2: DomainContext, z, X) -> SchwarzRecord:
    """Full pointwise record: inequality slack plus the covariance identity residual."""
    z = as_point(z, f.source.dim)
    X = as_point(X, f.source.dim)
    g1 = metric_norm_sq(metric_at(ctx1.kernel, z), X)
    pull = pullback_metric(f, ctx2.kernel, z, X)
    var_res = variance_bound(f, ctx1, ctx2, z, X)
    c_f = float(np.real(var_res.value))

    w0 = f(z)
    Y = f.push_direction(z, X)
    W = _w_integrand(f, ctx2.kernel, w0, Y)
    Z = lambda pts: ctx1.density._dlog_dir_unchecked(z, X, pts)
    cov = covariance(ctx1.density, ctx1.rule, z, Z, W)

    lhs = pull ** 2
    rhs = c_f * g1
    return SchwarzRecord(
        z=z, X=X, pullback=pull, base_metric=g1, c_f=c_f, lhs=lhs, rhs=rhs,
        slack=rhs - lhs,
        cov_identity_residual=abs(cov.value - pull),
        lambda_estimate=pull / g1 if g1 > 0 else 0.0,
        mean_w_abs=abs(var_res.mean) if var_res.mean is not None else 0.0,
        quad_error=var_res.quad_error_estimate,
        var_converged=variance_converged(var_res),
    )


@dataclass(frozen=True)
class EqualityReport:
    """Lambda-isometry classification over a sample of (z, X)."""

    is_lambda_isometry: bool
    lam: float
    ratio_spread: float
    condition_d_residual: float
    constant_map: bool
    injective_on_sample: bool
    classification_consistent: bool
    ratios: tuple[float, ...]


def equality_classifier(f: MapSpec, ctx1: DomainContext, ctx2: DomainContext,
                        sample: list[tuple], spread_tol: float = LAMBDA_SPREAD_TOL) -> EqualityReport:
    """Decide whether f is a lambda-isometry on the sample and cross-check it.

    The primary test is constancy of the metric ratio f*g2 / g1; the kernel
    cross-check compares the normalized off-diagonal kernel ratio of the
    target against the source ratio raised to lambda, and the
    constant/injective dichotomy is read off the sampled images.
    """
    if not sample:
        raise ValueError("equality classification needs a nonempty sample")
    ratios = []
    points = []
    for z, X in sample:
        z = as_point(z, f.source.dim)
        X = as_point(X, f.source.dim)
        if np.all(X == 0):
            raise ValueError("classification directions must be nonzero")
        g1 = metric_norm_sq(metric_at(ctx1.kernel, z), X)
        ratios.append(pullback_metric(f, ctx2.kernel, z, X) / g1)
        points.append(z)
    ratios_arr = np.array(ratios)
    spread = float(ratios_arr.max() - ratios_arr.min())
    lam = float(ratios_arr.mean())
    is_iso = spread <= spread_tol

    images = np.stack([f(p) for p in points])
    dists = np.linalg.norm(images[:, None, :] - images[None, :, :], axis=-1)
    iu = np.triu_indices(len(points), k=1)
    pair_d = dists[iu] if iu[0].size else np.array([0.0])
    is_const = bool(np.max(pair_d) <= 1e-9)
    injective = bool(np.min(pair_d) > 1e-9) if iu[0].size else True

    K1, K2 = ctx1.kernel, ctx2.kernel
    resid = 0.0
    m = len(points)
    for i in range(m):
        for j in range(i + 1, min(i + 4, m)):  # a few pairs per base point suffice
            zi, zj = points[i], points[j]
            rho1 = abs(complex(np.asarray(K1.kernel(zi, zj)))) ** 2 \
                / (float(K1.diag(zi)) * float(K1.diag(zj)))
            wi, wj = f(zi), f(zj)
            rho2 = abs(complex(np.asarray(K2.kernel(wi, wj)))) ** 2 \
                / (float(K2.diag(wi)) * float(K2.diag(wj)))
            resid = max(resid, abs(rho2 - rho1 ** lam))

    consistent = (not is_iso) or ((abs(lam) <= spread_tol) == is_const
                                  and ((abs(lam) > spread_tol) == injective))
    return EqualityReport(is_lambda_isometry=is_iso, lam=lam, ratio_spread=spread,
                          condition_d_residual=resid, constant_map=is_const,
                          injective_on_sample=injective,
                          classification_consistent=bool(consistent),
                          ratios=tuple(float(r) for r in ratios_arr))


def gradient_norm_pairs(kernel: KernelHandle, ws: np.ndarray, zetas: np.ndarray) -> np.ndarray:
    """|dlog P(w, zeta)|_g^2 for each w against every zeta, shape (len(ws), len(zetas))."""
    out = np.empty((ws.shape[0], zetas.shape[0]))
    for i, w in enumerate(ws):
        G = metric_at(kernel, w)
        comps = kernel.dlog_components(w, zetas)
        out[i] = np.einsum("pj,jk,pk->p", np.conjugate(comps), G.inverse, comps).real
    return np.maximum(out, 0.0)


def analytic_gradient_sup(domain: DomainSpec) -> float | None:
    """sup of the squared gradient norm of log P where it is known in closed form."""
    if isinstance(domain, Ball):
        return float(domain.dim + 1)
    if isinstance(domain, Polydisc):
        return float(2 * domain.dim)
    if isinstance(domain, Product):
        parts = [analytic_gradient_sup(f) for f in domain.factors]
        if any(p is None for p in parts):
            return None
        return float(sum(parts))
    return None


@dataclass(frozen=True)
class GlobalConstant:
    """Certified lower bound for the uniform gradient-norm constant.

    c_grid is a max over nested point grids, so the trend is nondecreasing by
    construction; the true sup is only bounded below by it.  analytic_sup is
    filled when the domain admits a closed form.
    """

    c_grid: float
    refinement_trend: tuple[float, ...]
    pairs_evaluated: int
    analytic_sup: float | None


def global_constant(ctx: DomainContext, levels: int = 4, per_level: int = 40,
                    eps: float = 0.02, seed: int = 7) -> GlobalConstant:
    """Grid estimate of sup |dlog P(w, zeta)|_g^2 over domain pairs."""
    rng = np.random.default_rng(seed)
    margins = np.geomspace(0.3, eps, levels)
    trend: list[float] = []
    best = 0.0
    total = 0
    for m in margins:
        ws = ctx.domain.sample_interior(rng, per_level, margin=float(m))
        zetas = ctx.domain.sample_interior(rng, per_level, margin=float(m))
        vals = gradient_norm_pairs(ctx.kernel, ws, zetas)
        total += vals.size
        best = max(best, float(vals.max()))
        trend.append(best)
    return GlobalConstant(c_grid=best, refinement_trend=tuple(trend),
                          pairs_evaluated=total,
                          analytic_sup=analytic_gradient_sup(ctx.domain))


@dataclass(frozen=True)
class GlobalComparisonRow:
    z: np.ndarray
    min_eigenvalue: float


@dataclass(frozen=True)
class GlobalComparison:
    """PSD check of C*g1 - f*g2 (as full Hermitian forms) at sample points."""

    constant: float
    rows: tuple[GlobalComparisonRow, ...]
    min_eigenvalue: float
    passed: bool


def verify_global(f: MapSpec, ctx1: DomainContext, ctx2: DomainContext,
                  C: float, points, eig_tol: float = PSD_EIG_TOL) -> GlobalComparison:
    rows = []
    worst = np.inf
    for z in np.atleast_2d(np.asarray(points, dtype=complex)):
        G1 = metric_at(ctx1.kernel, z)
        w0 = f(z)
        if not f.target.contains(w0):
            raise MapError(f"f(z) = {w0.tolist()} lies outside the target domain")
        J = f.jacobian(z)
        G2 = metric_at(ctx2.kernel, w0)
        pull = J.T @ G2.matrix @ np.conjugate(J)
        diff = C * G1.matrix - pull
        diff = 0.5 * (diff + diff.conj().T)
        mineig = float(np.linalg.eigvalsh(diff)[0])
        worst = min(worst, mineig)
        rows.append(GlobalComparisonRow(z=z, min_eigenvalue=mineig))
    return GlobalComparison(constant=float(C), rows=tuple(rows),
                            min_eigenvalue=float(worst), passed=bool(worst >= eig_tol))


@dataclass(frozen=True)
class SuzukiReport:
    """Grid evaluation of the Suzuki-type sufficient condition at exponent alpha."""

    alpha: float
    holds_on_grid: bool
    implied_C: float
    max_violation: float
    pairs_evaluated: int


def suzuki_condition_check(ctx: DomainContext, alpha: float, ws: np.ndarray,
                           zetas: np.ndarray, tol: float = SUZUKI_GRID_TOL) -> SuzukiReport:
    """Check alpha * |dlog P(w, zeta)|_g^2 <= 1 - rho(w, zeta)^alpha over a grid.

    Maximizing the directional form over unit-metric directions turns the
    left side into the dual (one-form) norm, so the grid evaluation needs no
    direction search.  Success implies the global constant C = 1/alpha.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    K = ctx.kernel
    zetas = np.atleast_2d(np.asarray(zetas, dtype=complex))
    diag_zeta = np.asarray(K.diag(zetas), dtype=float)
    worst = -np.inf
    for w in np.atleast_2d(np.asarray(ws, dtype=complex)):
        G = metric_at(K, w)
        comps = K.dlog_components(w, zetas)
        fvals = np.einsum("pj,jk,pk->p", np.conjugate(comps), G.inverse, comps).real
        koff = np.asarray(K.kernel(w, zetas))
        rho = (koff * np.conjugate(koff)).real / (float(K.diag(w)) * diag_zeta)
        violation = alpha * fvals - (1.0 - rho ** alpha)
        worst = max(worst, float(violation.max()))
    return SuzukiReport(alpha=float(alpha), holds_on_grid=bool(worst <= tol),
                        implied_C=1.0 / float(alpha), max_violation=worst,
                        pairs_evaluated=int(np.atleast_2d(ws).shape[0] * np.atleast_2d(zetas).shape[0]))


def builtin_map_suite() -> list[MapSpec]:
    """The fixed verification suite of holomorphic maps out of the unit disc."""
    disc = Ball(1)
    bidisc = Polydisc(2)
    ball2 = Ball(2)
    return [
        identity_map(disc),
        MapSpec(source=disc, target=bidisc, components=("z1", "0"),
                name="first-coordinate-embedding"),
        MapSpec(source=disc, target=disc, components=("z1**2",), name="square"),
        mobius_automorphism(disc, [0.3 - 0.2j], name="mobius(0.3-0.2j)"),
        constant_map(disc, bidisc, [0.25 + 0.1j, -0.2j], name="constant"),
        MapSpec(source=disc, target=ball2, components=("z1/2", "z1/2"),
                name="diagonal-into-ball"),
    ]
