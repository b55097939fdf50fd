"""Quadrature rules that turn domain integrals into finite weighted sums.

Discs and annuli use the substitution u = |z|^2, so a Gauss-Legendre rule in
u integrates |z|^(2k) exactly; that is exactly the family of integrands the
monomial Gram matrices are made of.  Angular integration is the uniform
(trapezoid) rule, exact for harmonics e^(ik(theta)) with |k| below the node
count.  Balls in higher dimension map the modulus-squared vector onto the
simplex through a Duffy-type substitution that keeps monomial exactness.
General domains get an indicator-filtered tensor rule over the bounding box;
nothing is renormalized, accuracy is reported.

All reductions run through a fixed pairwise-summation tree so repeated runs
are bit-identical.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .domains import Annulus, Ball, DomainSpec, General, Polydisc, Product

_CHUNK = 1 << 16


def pairwise_sum(values) -> complex | float:
    """Sum a 1-D array with a fixed fold-in-half tree (deterministic order)."""
    v = np.asarray(values)
    if v.size == 0:
        return v.dtype.type(0)
    while v.size > 1:
        m = v.size // 2
        head = v[:m] + v[m:2 * m]
        if v.size % 2:
            head = np.concatenate([head, v[2 * m:]])
        v = head
    return v[0]


@dataclass(frozen=True)
class QuadRule:
    """Nodes and positive weights realizing Lebesgue measure on a domain."""

    domain: DomainSpec
    order: int
    nodes: np.ndarray    # (m, n) complex, all strictly interior
    weights: np.ndarray  # (m,) positive
    vol_rtol: float      # stated accuracy of sum(weights) vs vol(domain)

    def __len__(self) -> int:
        return self.nodes.shape[0]

    def refine(self) -> "QuadRule":
        return build_rule(self.domain, 2 * self.order)


def _gauss01(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _angles(order: int) -> tuple[np.ndarray, float]:
    m = 2 * order + 1
    theta = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    return theta, 2.0 * np.pi / m


def _disc_like(order: int, u_lo: float, u_hi: float):
    # radial nodes in u = |z|^2 on [u_lo, u_hi], uniform angles
    u, wu = _gauss01(order)
    u = u_lo + (u_hi - u_lo) * u
    wu = (u_hi - u_lo) * wu
    theta, wt = _angles(order)
    uu, tt = np.meshgrid(u, theta, indexing="ij")
    z = np.sqrt(uu) * np.exp(1j * tt)
    w = 0.5 * wt * np.broadcast_to(wu[:, None], uu.shape)
    return z.reshape(-1, 1), w.reshape(-1)


def _ball_rule(dim: int, order: int):
    # |z_j|^2 = t_j on the open simplex via the iterated substitution
    # t_j = v_j * prod_{i<j}(1 - v_i); Jacobian prod (1 - v_i)^(n - i).
    v, wv = _gauss01(order)
    theta, wt = _angles(order)
    grids_v = np.meshgrid(*([v] * dim), indexing="ij")
    grids_t = np.meshgrid(*([theta] * dim), indexing="ij")
    t = []
    rem = np.ones_like(grids_v[0])
    jac = np.ones_like(grids_v[0])
    for j in range(dim):
        t.append(rem * grids_v[j])
        if j < dim - 1:
            rem = rem * (1.0 - grids_v[j])
            jac = jac * (1.0 - grids_v[j]) ** (dim - 1 - j)
    wv_grid = functools.reduce(np.multiply.outer, [wv] * dim)
    radial = (wv_grid * jac).reshape(-1)
    t_flat = np.stack([tj.reshape(-1) for tj in t], axis=-1)  # (Mr, n)
    th_flat = np.stack([tg.reshape(-1) for tg in grids_t], axis=-1)  # (Ma, n)
    z = np.sqrt(t_flat[:, None, :]) * np.exp(1j * th_flat[None, :, :])
    w = (0.5 ** dim) * (wt ** dim) * radial[:, None] * np.ones(th_flat.shape[0])[None, :]
    return z.reshape(-1, dim), w.reshape(-1)


def _tensor(rules: list[tuple[np.ndarray, np.ndarray]]):
    nodes, weights = rules[0]
    for nz, nw in rules[1:]:
        m1, n1 = nodes.shape
        m2, n2 = nz.shape
        nodes = np.concatenate(
            [np.repeat(nodes, m2, axis=0), np.tile(nz, (m1, 1))], axis=1)
        weights = (weights[:, None] * nw[None, :]).reshape(-1)
    return nodes, weights


def _general_rule(domain: General, order: int):
    box = np.asarray(domain.bounding_box(), dtype=float)
    x, w = leggauss(order)
    axes, wts = [], []
    for lo, hi in box:
        axes.append(0.5 * (hi - lo) * (x + 1.0) + lo)
        wts.append(0.5 * (hi - lo) * w)
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weight = functools.reduce(np.multiply.outer, wts).reshape(-1)
    pts = coords[:, 0::2] + 1j * coords[:, 1::2]
    keep = domain.indicator(pts)
    if not np.any(keep):
        raise ValueError("indicator rejected every node: degenerate domain input")
    return pts[keep], weight[keep]


@functools.lru_cache(maxsize=64)
def _build_rule_cached(domain: DomainSpec, order: int) -> QuadRule:
    if isinstance(domain, Ball) and domain.dim == 1:
        nodes, weights = _disc_like(order, 0.0, 1.0)
        rtol = 1e-12
    elif isinstance(domain, Ball):
        nodes, weights = _ball_rule(domain.dim, order)
        rtol = 1e-12
    elif isinstance(domain, Annulus):
        nodes, weights = _disc_like(order, domain.r ** 2, 1.0)
        rtol = 1e-12
    elif isinstance(domain, Polydisc):
        disc = _disc_like(order, 0.0, 1.0)
        nodes, weights = _tensor([disc] * domain.dim)
        rtol = 1e-12
    elif isinstance(domain, Product):
        parts = [(r.nodes, r.weights)
                 for r in (build_rule(f, order) for f in domain.factors)]
        nodes, weights = _tensor(parts)
        rtol = max(build_rule(f, order).vol_rtol for f in domain.factors)
    elif isinstance(domain, General):
        nodes, weights = _general_rule(domain, order)
        coarse = _general_rule(domain, max(2, order // 2))
        s, sc = float(np.sum(weights)), float(np.sum(coarse[1]))
        rtol = abs(s - sc) / max(abs(s), 1e-300)
    else:
        raise ValueError(f"no quadrature construction for domain kind {domain.kind!r}")
    nodes = np.ascontiguousarray(nodes)
    weights = np.ascontiguousarray(weights)
    if np.any(weights <= 0):
        raise RuntimeError("internal error: non-positive quadrature weight")
    return QuadRule(domain=domain, order=order, nodes=nodes, weights=weights, vol_rtol=rtol)


def build_rule(domain: DomainSpec, order: int) -> QuadRule:
    """Quadrature rule on `domain` whose accuracy grows with `order`.

    For discs, annuli, balls, and polydiscs the rule integrates |z|^(2k)
    exactly for k <= 2*order - 1 and kills angular harmonics up to 2*order,
    so monomial Gram integrals z^a conj(z)^b are exact for max degree up to
    min(2*order - 1, 2*order).  General domains get an indicator-filtered
    tensor rule; its stated volume tolerance is estimated, not guaranteed.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    return _build_rule_cached(domain, int(order))


def _evaluate(f, nodes: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(nodes), dtype=complex)
        if vals.shape == nodes.shape[:1]:
            return vals
        if vals.ndim == 0:  # constant integrand
            return np.broadcast_to(vals, nodes.shape[:1]).copy()
    except (TypeError, ValueError, IndexError):
        pass
    return np.array([f(p) for p in nodes], dtype=complex)


def integrate(rule: QuadRule, f) -> complex:
    """Sum w_j * f(node_j) in a fixed deterministic order.

    `f` may be vectorized (mapping an (m, n) batch to (m,) values) or act on
    single points; vectorized evaluation is attempted first.  A non-finite
    value at any node is an error naming the node.
    """
    partials = []
    nodes, weights = rule.nodes, rule.weights
    for start in range(0, len(rule), _CHUNK):
        sl = slice(start, start + _CHUNK)
        vals = _evaluate(f, nodes[sl])
        bad = ~np.isfinite(vals)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(
                f"integrand not finite at node {start + i}: {nodes[sl][i].tolist()}")
        partials.append(pairwise_sum(weights[sl] * vals))
    return complex(pairwise_sum(np.asarray(partials)))
