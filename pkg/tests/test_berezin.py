import math

import numpy as np
import pytest

from bergman_lab.berezin import (BerezinDensity, covariance, density, dlogP, expectation,
                                 fisher_pullback, normalization_residual, reproducing_check,
                                 variance)
from bergman_lab.domains import Annulus, Ball
from bergman_lab.kernels import laurent_kernel, numeric_kernel
from bergman_lab.metric import metric_at, metric_norm_sq
from bergman_lab.quadrature import build_rule

from conftest import unit_directions


@pytest.fixture(scope="module")
def disc_density(disc_kernel):
    return BerezinDensity(disc_kernel)


@pytest.fixture(scope="module")
def bidisc_density(bidisc_kernel):
    return BerezinDensity(bidisc_kernel)


@pytest.fixture(scope="module")
def annulus_density(annulus_kernel):
    return BerezinDensity(annulus_kernel)


def disc_dlog(z: complex, xi: complex) -> complex:
    # oracle: -2 (conj(z)/(1-|z|^2) - conj(xi)/(1 - z conj(xi)))
    return -2.0 * (np.conjugate(z) / (1 - abs(z) ** 2)
                   - np.conjugate(xi) / (1 - z * np.conjugate(xi)))


def test_density_constant_at_disc_center(disc_density):
    for xi in ([0.3 + 0.1j], [0.7j], [-0.5 + 0.2j]):
        assert density(disc_density, [0j], xi) == pytest.approx(1 / math.pi)


def test_density_diagonal_equals_kernel_diagonal(disc_density, disc_kernel):
    z = [0.4 - 0.1j]
    assert density(disc_density, z, z) == pytest.approx(
        disc_kernel.diag(np.array(z, dtype=complex)))


def test_density_nonnegative_batch(bidisc_density, rng):
    z = [0.2 + 0.1j, -0.3j]
    pts = bidisc_density.domain.sample_interior(rng, 50)
    assert np.all(bidisc_density.density(z, pts) >= 0)


def test_annulus_density_vanishes_at_kernel_zero():
    # the truncated kernel k(w), w = z conj(xi), changes sign on the negative
    # real w-axis near |w| = sqrt(r); bisect the zero and check P there
    kernel = laurent_kernel(Annulus(0.5), 60)
    dens = BerezinDensity(kernel)
    z = np.array([0.84 + 0j])

    def kv(t: float) -> float:
        return complex(np.asarray(kernel.kernel(z, np.array([-t + 0j])))).real

    lo, hi = 0.80, 0.88
    assert kv(lo) * kv(hi) < 0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if kv(lo) * kv(mid) <= 0:
            hi = mid
        else:
            lo = mid
    t0 = 0.5 * (lo + hi)
    assert density(dens, z, [-t0 + 0j]) < 1e-25


def test_normalization_across_domains(disc_density, bidisc_density, annulus_density,
                                      disc_rule, bidisc_rule, annulus_rule, rng):
    for dens, rule, margin, count in ((disc_density, disc_rule, 0.4, 20),
                                      (bidisc_density, bidisc_rule, 0.55, 6),
                                      (annulus_density, annulus_rule, 0.12, 8)):
        pts = dens.domain.sample_interior(rng, count, margin=margin)
        for z in pts:
            assert normalization_residual(dens, rule, z) <= 1e-8


def test_expectation_of_constant(disc_density, disc_rule):
    res = expectation(disc_density, disc_rule, [0.3 + 0.2j], lambda p: np.full(p.shape[0], 2.5 - 1j))
    assert res.value == pytest.approx(2.5 - 1j, abs=1e-12)


def test_expectation_of_coordinate_at_center(disc_density, disc_rule):
    res = expectation(disc_density, disc_rule, [0j], lambda p: p[:, 0])
    assert abs(res.value) < 1e-12


def test_mean_zero_identity(disc_density, disc_rule, rng):
    # E[d_X log P(z, .)] = 0, the first-moment identity
    pts = disc_density.domain.sample_interior(rng, 20, margin=0.4)
    dirs = unit_directions(rng, 20, 1)
    for z, X in zip(pts, dirs):
        res = expectation(disc_density, disc_rule, z,
                          lambda p: disc_density._dlog_dir_unchecked(z, X, p))
        assert abs(res.value) <= 1e-8


def test_mean_zero_on_bidisc(bidisc_density, bidisc_rule, rng):
    pts = bidisc_density.domain.sample_interior(rng, 6, margin=0.55)
    dirs = unit_directions(rng, 6, 2)
    for z, X in zip(pts, dirs):
        res = expectation(bidisc_density, bidisc_rule, z,
                          lambda p: bidisc_density._dlog_dir_unchecked(z, X, p))
        assert abs(res.value) <= 1e-8


def test_variance_of_constant_is_zero(disc_density, disc_rule):
    res = variance(disc_density, disc_rule, [0.2 + 0j], lambda p: np.full(p.shape[0], 3.0 + 4j))
    assert res.value == pytest.approx(0.0, abs=1e-12)
    assert res.cross_check <= 1e-10


def test_variance_of_dlog_at_center(disc_density, disc_rule):
    z = np.array([0j])
    X = np.array([1.0 + 0j])
    res = variance(disc_density, disc_rule, z, lambda p: disc_density._dlog_dir_unchecked(z, X, p))
    assert res.value == pytest.approx(2.0, abs=1e-6)  # metric value at the origin
    assert abs(res.mean) < 1e-10


def test_cauchy_schwarz_for_random_polynomials(disc_density, disc_rule, rng):
    z = np.array([0.3 - 0.1j])
    for _ in range(10):
        cz = rng.normal(size=3) + 1j * rng.normal(size=3)
        cw = rng.normal(size=3) + 1j * rng.normal(size=3)
        Z = lambda p: cz[0] + cz[1] * p[:, 0] + cz[2] * p[:, 0] ** 2
        W = lambda p: cw[0] + cw[1] * p[:, 0] + cw[2] * p[:, 0] ** 2
        cov = covariance(disc_density, disc_rule, z, Z, W)
        vz = variance(disc_density, disc_rule, z, Z)
        vw = variance(disc_density, disc_rule, z, W)
        assert abs(cov.value) ** 2 <= vz.value * vw.value + 1e-12


def test_covariance_two_pass_matches_naive(disc_density, disc_rule):
    z = np.array([0.25 + 0.15j])
    Z = lambda p: p[:, 0] ** 2
    W = lambda p: 1.5 * p[:, 0]
    cov = covariance(disc_density, disc_rule, z, Z, W)
    assert cov.cross_check <= 1e-12


def test_dlogP_matches_disc_closed_form(disc_density):
    z, xi = 0.37 + 0.21j, 0.5 - 0.3j
    val = dlogP(disc_density, [z], [1.0], [xi])
    assert val == pytest.approx(disc_dlog(z, xi), rel=1e-13)


def test_dlogP_vanishes_at_symmetric_center(disc_density):
    assert dlogP(disc_density, [0j], [1.0], [0j]) == pytest.approx(0.0, abs=1e-15)


def test_dlogP_linear_in_direction(disc_density):
    assert dlogP(disc_density, [0.2 + 0j], [0.0], [0.5j]) == 0.0
    v1 = dlogP(disc_density, [0.2 + 0j], [1.0], [0.5j])
    v2 = dlogP(disc_density, [0.2 + 0j], [2.0 - 1j], [0.5j])
    assert v2 == pytest.approx((2.0 - 1j) * v1, rel=1e-13)


def test_dlogP_raises_at_density_zero():
    kernel = laurent_kernel(Annulus(0.5), 60)
    dens = BerezinDensity(kernel)
    z = np.array([0.84 + 0j])
    # find a kernel zero along the negative real radius first
    ts = np.linspace(0.80, 0.88, 40000)
    kv = np.array([complex(np.asarray(kernel.kernel(z, np.array([-t + 0j])))).real for t in ts])
    i = int(np.argmin(np.abs(kv)))
    if dens.density(z, np.array([-ts[i] + 0j])) < 1e-300:
        with pytest.raises(ValueError, match="singular"):
            dlogP(dens, z, [1.0], [-ts[i] + 0j])
    else:
        pytest.skip("grid did not land inside the density floor")


def test_fisher_pullback_disc_center(disc_density, disc_rule):
    assert fisher_pullback(disc_density, disc_rule, [0j], [1.0]) == pytest.approx(2.0, abs=1e-8)


def test_fisher_pullback_ball2_center(ball2_kernel, ball2):
    dens = BerezinDensity(ball2_kernel)
    rule = build_rule(ball2, 14)
    assert fisher_pullback(dens, rule, [0j, 0j], [1.0, 0.0]) == pytest.approx(3.0, rel=1e-8)


def test_fisher_pullback_bidisc_diagonal(bidisc_density, bidisc_rule):
    val = fisher_pullback(bidisc_density, bidisc_rule, [0j, 0j], [1.0, 1.0])
    assert val == pytest.approx(4.0, rel=1e-8)  # 2 + 2 on the product diagonal


def test_fisher_pullback_equals_metric_closed(disc_density, disc_rule, rng):
    pts = disc_density.domain.sample_interior(rng, 20, margin=0.4)
    dirs = unit_directions(rng, 20, 1)
    for z, X in zip(pts, dirs):
        v = fisher_pullback(disc_density, disc_rule, z, X)
        g = metric_norm_sq(metric_at(disc_density.kernel, z), X)
        assert abs(v - g) / g <= 1e-8


def test_fisher_pullback_equals_metric_numeric(disc, rng):
    kernel = numeric_kernel(disc, build_rule(disc, 40), 20)
    dens = BerezinDensity(kernel)
    rule = build_rule(disc, 36)
    pts = disc.sample_interior(rng, 8, margin=0.45)
    dirs = unit_directions(rng, 8, 1)
    for z, X in zip(pts, dirs):
        v = fisher_pullback(dens, rule, z, X)
        g = metric_norm_sq(metric_at(kernel, z), X)
        assert abs(v - g) / g <= 1e-4


def test_fisher_pullback_annulus(annulus_density, annulus_rule):
    v = fisher_pullback(annulus_density, annulus_rule, [0.7 + 0j], [1.0])
    g = metric_norm_sq(metric_at(annulus_density.kernel, [0.7 + 0j]), [1.0])
    assert v == pytest.approx(g, rel=1e-10)


def test_fisher_pullback_rejects_zero_direction(disc_density, disc_rule):
    with pytest.raises(ValueError, match="nonzero"):
        fisher_pullback(disc_density, disc_rule, [0j], [0.0])


def test_reproducing_check_constant(disc_density, disc_rule):
    assert reproducing_check(disc_density, disc_rule, [0.4 + 0.1j],
                             lambda p: np.ones(p.shape[0])) <= 1e-12


def test_reproducing_check_square(disc_density, disc_rule):
    assert reproducing_check(disc_density, disc_rule, [0.3 + 0j],
                             lambda p: p[:, 0] ** 2) <= 1e-8


def test_reproducing_check_bidisc(bidisc_density, bidisc_rule):
    assert reproducing_check(bidisc_density, bidisc_rule, [0.2 + 0j, 0.2j],
                             lambda p: p[:, 0] * p[:, 1]) <= 1e-8


def test_moment_error_estimates_reported(disc_density, disc_rule):
    z = np.array([0.3 + 0j])
    res = variance(disc_density, disc_rule, z,
                   lambda p: disc_density._dlog_dir_unchecked(z, np.array([1.0 + 0j]), p))
    assert res.quad_error_estimate >= 0
    assert res.cross_check is not None


def test_variance_negative_guard(disc_density, disc_rule, monkeypatch):
    import bergman_lab.berezin as bz
    monkeypatch.setattr(bz, "pairwise_sum", lambda v: -1.0)
    with pytest.raises(ValueError, match="negative"):
        bz.variance(disc_density, disc_rule, [0.1 + 0j], lambda p: p[:, 0])


def test_skipped_nodes_counted_near_kernel_zero():
    # with the N=60 truncation the density dips below the floor only at exact
    # zeros; integrate anyway and require the machinery to stay finite
    kernel = laurent_kernel(Annulus(0.5), 60)
    dens = BerezinDensity(kernel)
    rule = build_rule(Annulus(0.5), 40)
    res = expectation(dens, rule, [0.84 + 0j], lambda p: np.ones(p.shape[0]))
    assert res.value == pytest.approx(1.0, abs=1e-8)
    assert res.skipped_nodes >= 0
