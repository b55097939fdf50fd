import math

import numpy as np
import pytest

from bergman_lab.domains import Ball, TangentVector
from bergman_lab.kernels import numeric_kernel
from bergman_lab.maps import mobius_automorphism
from bergman_lab.metric import (finite_difference_check, metric_at, metric_norm_sq,
                                metric_pair, oneform_norm)
from bergman_lab.quadrature import build_rule
from bergman_lab.schwarz import pullback_metric


def disc_metric(z: complex) -> float:
    # oracle: 2 / (1 - |z|^2)^2 on the unit disc
    return 2.0 / (1.0 - abs(z) ** 2) ** 2


def ball_metric_matrix(z: np.ndarray) -> np.ndarray:
    # oracle: (n+1)/(1-|z|^2)^2 ((1-|z|^2) delta_jk + conj(z_j) z_k)
    n = z.shape[0]
    s = 1.0 - float(np.sum(np.abs(z) ** 2))
    return (n + 1) / s ** 2 * (s * np.eye(n) + np.outer(np.conjugate(z), z))


def test_disc_metric_at_origin(disc_kernel):
    G = metric_at(disc_kernel, [0j])
    assert G.matrix[0, 0] == pytest.approx(2.0)


def test_ball2_metric_at_origin(ball2_kernel):
    G = metric_at(ball2_kernel, [0j, 0j])
    assert np.allclose(G.matrix, 3.0 * np.eye(2), atol=1e-13)


def test_bidisc_metric_at_origin(bidisc_kernel):
    G = metric_at(bidisc_kernel, [0j, 0j])
    assert np.allclose(G.matrix, 2.0 * np.eye(2), atol=1e-13)


def test_disc_metric_matches_closed_form(disc_kernel, rng):
    for z in rng.uniform(-0.6, 0.6, size=(10, 2)):
        zc = complex(z[0], z[1])
        G = metric_at(disc_kernel, [zc])
        assert G.matrix[0, 0].real == pytest.approx(disc_metric(zc), rel=1e-12)


def test_ball2_metric_matches_closed_form(ball2_kernel, rng):
    pts = Ball(2).sample_interior(rng, 8, margin=0.2)
    for z in pts:
        G = metric_at(ball2_kernel, z)
        assert np.allclose(G.matrix, ball_metric_matrix(z), rtol=1e-11)


@pytest.mark.parametrize("fixture", ["disc_kernel", "ball2_kernel", "bidisc_kernel",
                                     "annulus_kernel"])
def test_metric_positive_definite_at_random_points(fixture, rng, request):
    kernel = request.getfixturevalue(fixture)
    margin = 0.05 if kernel.domain.kind != "annulus" else 0.03
    pts = kernel.domain.sample_interior(rng, 50, margin=margin)
    for z in pts:
        G = metric_at(kernel, z)
        assert G.eigenvalues[0] > 0
        assert np.allclose(G.matrix @ G.inverse, np.eye(G.dim), atol=1e-10)
        assert np.allclose(G.sqrt_inverse @ G.sqrt_inverse, G.inverse, atol=1e-10)
        assert np.allclose(G.matrix, G.matrix.conj().T, atol=1e-12 * np.linalg.norm(G.matrix))


def test_metric_pair_values(disc_kernel, ball2_kernel):
    G = metric_at(disc_kernel, [0j])
    assert metric_pair(G, [1.0], [1.0]) == pytest.approx(2.0)
    assert metric_pair(G, [0.0], [1.0]) == pytest.approx(0.0)
    G2 = metric_at(ball2_kernel, [0j, 0j])
    assert metric_pair(G2, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)


def test_metric_pair_positive_on_diagonal(bidisc_kernel, rng):
    pts = bidisc_kernel.domain.sample_interior(rng, 10, margin=0.1)
    for z in pts:
        G = metric_at(bidisc_kernel, z)
        X = rng.normal(size=2) + 1j * rng.normal(size=2)
        val = metric_pair(G, X, X)
        assert val.real > 0 and abs(val.imag) < 1e-12 * val.real


def test_metric_pair_rejects_base_mismatch(disc_kernel):
    G = metric_at(disc_kernel, [0.2 + 0j])
    X = TangentVector([0.3 + 0j], [1.0])
    with pytest.raises(ValueError, match="different point"):
        metric_pair(G, X, X)


def test_oneform_norm_values(disc_kernel, ball2_kernel):
    G = metric_at(disc_kernel, [0j])
    assert oneform_norm(G, [2.0]) == pytest.approx(2.0)   # |2|^2 / 2
    assert oneform_norm(G, [0.0]) == pytest.approx(0.0)
    G2 = metric_at(ball2_kernel, [0j, 0j])
    assert oneform_norm(G2, [3.0, 0.0]) == pytest.approx(3.0)  # inverse = I/3


def test_oneform_norm_is_dual_norm(disc_kernel, rng):
    # |eta|^2 = sup_X |eta(X)|^2 / g(X, X); check against the maximizer G^{-1} eta
    G = metric_at(disc_kernel, [0.3 - 0.2j])
    eta = np.array([1.2 - 0.7j])
    dual = oneform_norm(G, eta)
    best = 0.0
    for _ in range(200):
        X = rng.normal(size=1) + 1j * rng.normal(size=1)
        best = max(best, abs(np.sum(eta * X)) ** 2 / metric_pair(G, X, X).real)
    assert best <= dual * (1 + 1e-12)
    X_star = np.conjugate(G.inverse @ eta)
    attained = abs(np.sum(eta * X_star)) ** 2 / metric_pair(G, X_star, X_star).real
    assert attained == pytest.approx(dual, rel=1e-10)


@pytest.mark.parametrize("fixture,z,h", [
    ("disc_kernel", [0.3 + 0j], 1e-4),
    ("bidisc_kernel", [0.2 + 0j, 0.1 + 0j], 1e-4),
    # the annulus log-kernel has much larger fourth derivatives on its narrow
    # shell; balance h^2 truncation against the eps/h^2 roundoff floor
    ("annulus_kernel", [0.7 + 0.1j], 3e-5),
])
def test_finite_difference_agreement(fixture, z, h, request):
    kernel = request.getfixturevalue(fixture)
    assert finite_difference_check(kernel, z, h) <= 1e-6


def test_finite_difference_at_symmetric_center(disc_kernel):
    # odd-order stencil terms cancel at the origin, but float64 keeps the
    # eps/h^2 roundoff floor ~2e-8 at h = 1e-4
    assert finite_difference_check(disc_kernel, [0j], 1e-4) <= 5e-8


def test_finite_difference_stencil_margin(disc_kernel):
    with pytest.raises(ValueError, match="stencil"):
        finite_difference_check(disc_kernel, [0.999999 + 0j], 1e-3)


def test_mobius_pullback_invariance(disc_kernel, rng):
    # disc automorphisms are isometries of the metric
    for _ in range(10):
        a = rng.uniform(-0.6, 0.6) + 1j * rng.uniform(-0.6, 0.6)
        phi = mobius_automorphism(Ball(1), [a])
        z = Ball(1).sample_interior(rng, 1, margin=0.25)[0]
        X = np.array([1.0 - 0.3j])
        direct = metric_norm_sq(metric_at(disc_kernel, z), X)
        pulled = pullback_metric(phi, disc_kernel, z, X)
        assert pulled == pytest.approx(direct, rel=1e-10)


def test_degenerate_numeric_metric_raises(disc):
    flat = numeric_kernel(disc, build_rule(disc, 10), 0)  # constant kernel, log K flat
    with pytest.raises(ValueError, match="positive definite"):
        metric_at(flat, [0.1 + 0j])


def test_metric_norm_sq_clips_roundoff(disc_kernel):
    G = metric_at(disc_kernel, [0j])
    assert metric_norm_sq(G, [0.0]) == 0.0
