import math

import numpy as np
import pytest

from bergman_lab.domains import Annulus, Ball, General, Polydisc, Product
from bergman_lab.quadrature import build_rule, integrate, pairwise_sum

DOMAINS = [Ball(1), Ball(2), Polydisc(2), Annulus(0.5), Product((Ball(1), Ball(1)))]


def disc_monomial(k: int) -> float:
    # oracle: int_D |z|^(2k) dV = 2*pi * int_0^1 r^(2k+1) dr = pi / (k+1)
    return math.pi / (k + 1)


def ball_monomial(alpha) -> float:
    # oracle: pi^n * prod(a_j!) / (n + |a|)!
    n, tot = len(alpha), sum(alpha)
    return math.pi ** n * math.prod(math.factorial(a) for a in alpha) / math.factorial(n + tot)


def test_disc_weight_sum_is_area():
    rule = build_rule(Ball(1), 20)
    assert abs(float(np.sum(rule.weights)) - math.pi) < 1e-12


def test_polydisc_weight_sum():
    rule = build_rule(Polydisc(2), 20)
    assert abs(float(np.sum(rule.weights)) - math.pi ** 2) < 1e-12


def test_disc_radial_monomial():
    rule = build_rule(Ball(1), 20)
    val = integrate(rule, lambda p: np.abs(p[:, 0]) ** 6)
    assert abs(val - math.pi / 4) < 1e-12  # k = 3


def test_integrate_constant_gives_volume():
    rule = build_rule(Ball(1), 10)
    assert abs(integrate(rule, lambda p: np.ones(p.shape[0])) - math.pi) < 1e-12


def test_integrate_odd_symmetry():
    rule = build_rule(Ball(1), 10)
    assert abs(integrate(rule, lambda p: p[:, 0])) < 1e-14


def test_integrate_abs_square():
    rule = build_rule(Ball(1), 10)
    assert abs(integrate(rule, lambda p: np.abs(p[:, 0]) ** 2) - math.pi / 2) < 1e-12


def test_integrate_accepts_scalar_function():
    rule = build_rule(Ball(1), 5)
    assert abs(integrate(rule, lambda p: 1.0) - math.pi) < 1e-12


@pytest.mark.parametrize("domain", DOMAINS, ids=lambda d: d.kind + str(d.dim))
def test_weights_positive_nodes_interior(domain):
    rule = build_rule(domain, 8)
    assert np.all(rule.weights > 0)
    assert np.all(domain.indicator(rule.nodes))


@pytest.mark.parametrize("a,b", [(0, 0), (1, 1), (3, 3), (5, 5), (1, 0), (4, 2), (7, 3)])
def test_disc_monomial_exactness(a, b):
    # z^a conj(z)^b: zero unless a == b, else pi/(a+1); exact for |a| <= order/2
    rule = build_rule(Ball(1), 14)
    val = integrate(rule, lambda p: p[:, 0] ** a * np.conjugate(p[:, 0]) ** b)
    expected = disc_monomial(a) if a == b else 0.0
    assert abs(val - expected) < 1e-12


@pytest.mark.parametrize("alpha,beta", [((1, 2), (1, 2)), ((2, 0), (2, 0)),
                                        ((1, 2), (2, 1)), ((3, 1), (3, 0))])
def test_polydisc_monomial_exactness(alpha, beta):
    rule = build_rule(Polydisc(2), 12)
    val = integrate(rule, lambda p: p[:, 0] ** alpha[0] * p[:, 1] ** alpha[1]
                    * np.conjugate(p[:, 0]) ** beta[0] * np.conjugate(p[:, 1]) ** beta[1])
    if alpha == beta:
        expected = math.prod(math.pi / (a + 1) for a in alpha)
    else:
        expected = 0.0
    assert abs(val - expected) < 1e-12


@pytest.mark.parametrize("alpha", [(0, 0), (1, 0), (2, 3), (1, 1)])
def test_ball2_monomial_against_factorial_formula(alpha):
    rule = build_rule(Ball(2), 10)
    val = integrate(rule, lambda p: np.abs(p[:, 0]) ** (2 * alpha[0])
                    * np.abs(p[:, 1]) ** (2 * alpha[1]))
    assert abs(val - ball_monomial(alpha)) < 1e-12


@pytest.mark.parametrize("k", range(6))
def test_refinement_consistency(k):
    coarse = build_rule(Ball(1), 12)
    fine = build_rule(Ball(1), 24)
    f = lambda p: np.abs(p[:, 0]) ** (2 * k)
    assert abs(integrate(coarse, f) - integrate(fine, f)) < 1e-12


def test_annulus_weight_sum():
    rule = build_rule(Annulus(0.5), 20)
    assert abs(float(np.sum(rule.weights)) - math.pi * 0.75) < 1e-12


def test_annulus_laurent_norms():
    # int_A |z|^(2k) dV for negative k: analytic value pi (1 - r^(2k+2)) / (k+1)
    rule = build_rule(Annulus(0.5), 40)
    for k in (-5, -2, 1, 4):
        val = integrate(rule, lambda p: np.abs(p[:, 0]) ** (2 * k))
        expected = math.pi * (1 - 0.5 ** (2 * k + 2)) / (k + 1)
        assert abs(val - expected) < 1e-10 * abs(expected)
    val = integrate(rule, lambda p: np.abs(p[:, 0]) ** (-2.0))
    assert abs(val - 2 * math.pi * math.log(2.0)) < 1e-10


def test_integrate_reports_bad_node():
    rule = build_rule(Ball(1), 6)

    def bad(p):
        vals = np.ones(p.shape[0], dtype=complex)
        vals[3] = np.nan
        return vals

    with pytest.raises(ValueError, match="node 3"):
        integrate(rule, bad)


def test_degenerate_general_domain_raises():
    empty = General(dim=1, box=((-1.0, 1.0), (-1.0, 1.0)),
                    indicator_fn=lambda p: np.zeros(p.shape[:-1], dtype=bool))
    with pytest.raises(ValueError, match="degenerate"):
        build_rule(empty, 8)


def test_general_rule_filters_by_indicator():
    halfdisc = General(dim=1, box=((0.0, 1.0), (-1.0, 1.0)),
                       indicator_fn=lambda p: (np.abs(p[..., 0]) < 1.0) & (p[..., 0].real > 0))
    rule = build_rule(halfdisc, 40)
    assert np.all(halfdisc.indicator(rule.nodes))
    # half-disc area pi/2, indicator-filtered box rule is low order accurate only
    assert abs(float(np.sum(rule.weights)) - math.pi / 2) < 2e-2
    assert rule.vol_rtol > 0


def test_rule_order_validation():
    with pytest.raises(ValueError):
        build_rule(Ball(1), 0)


def test_pairwise_sum_matches_fsum(rng):
    for size in (1, 2, 7, 64, 1001):
        vals = rng.normal(size=size) * 10.0 ** rng.integers(-8, 8, size=size)
        assert pairwise_sum(vals) == pytest.approx(math.fsum(vals), rel=1e-13, abs=1e-13)


def test_pairwise_sum_complex_and_empty(rng):
    vals = rng.normal(size=33) + 1j * rng.normal(size=33)
    direct = complex(np.sum(vals))
    assert pairwise_sum(vals) == pytest.approx(direct, rel=1e-12)
    assert pairwise_sum(np.array([])) == 0


def test_pairwise_sum_deterministic(rng):
    vals = rng.normal(size=12345)
    assert pairwise_sum(vals) == pairwise_sum(vals.copy())
