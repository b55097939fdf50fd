"""Holomorphic maps between domains, restricted to an exactly-differentiable family.

Components are rational expressions in the source coordinates z1..zn with
complex coefficients — polynomials, per-coordinate disc automorphisms
(z - a)/(1 - conj(a) z), and their compositions all live here.  Jacobians
come from symbolic differentiation, so derivative error never contaminates a
verification; black-box callables are rejected for exactly that reason.
Image containment in the target is checked lazily against every quadrature
node the map is integrated over.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .domains import DomainSpec, as_point
from .quadrature import QuadRule


class MapError(ValueError):
    """Invalid map specification or image escaping the target domain."""


def _source_symbols(n: int) -> list[sp.Symbol]:
    return [sp.Symbol(f"z{j + 1}", complex=True) for j in range(n)]


def _parse_component(expr, symbols: list[sp.Symbol]) -> sp.Expr:
    if isinstance(expr, str):
        local = {s.name: s for s in symbols}
        local["I"] = sp.I
        try:
            parsed = sp.sympify(expr, locals=local)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise MapError(f"cannot parse map component {expr!r}: {exc}") from exc
    else:
        parsed = sp.sympify(expr)
    extra = parsed.free_symbols - set(symbols)
    if extra:
        raise MapError(f"component uses unknown symbols {sorted(map(str, extra))}")
    if parsed.has(sp.conjugate, sp.Abs, sp.re, sp.im, sp.arg) \
            or not parsed.is_rational_function(*symbols):
        raise MapError(f"component {sp.srepr(parsed)} is outside the rational "
                       "(polynomial / Moebius / composition) family")
    return parsed


def _lambdify(expr: sp.Expr, symbols: list[sp.Symbol]):
    fn = sp.lambdify(symbols, expr, modules="numpy")

    def call(coords: list[np.ndarray]) -> np.ndarray:
        out = fn(*coords)
        return np.broadcast_to(np.asarray(out, dtype=complex), coords[0].shape)

    return call


@dataclass
class MapSpec:
    """A holomorphic map f: source -> target with an exact Jacobian."""

    source: DomainSpec
    target: DomainSpec
    components: tuple[sp.Expr, ...]
    name: str = ""
    certified_automorphism: bool = field(default=False)

    def __post_init__(self):
        self._syms = _source_symbols(self.source.dim)
        comps = tuple(_parse_component(c, self._syms) for c in self.components)
        if len(comps) != self.target.dim:
            raise MapError(f"map has {len(comps)} components, target has dimension "
                           f"{self.target.dim}")
        object.__setattr__(self, "components", comps)
        self._fns = [_lambdify(c, self._syms) for c in comps]
        self._jac_exprs = [[sp.diff(c, s) for s in self._syms] for c in comps]
        self._jac_fns = [[_lambdify(d, self._syms) for d in row] for row in self._jac_exprs]
        self._checked_rules: set[int] = set()

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        single = pts.ndim == 1
        batch = pts[None, :] if single else pts
        coords = [np.ascontiguousarray(batch[..., j]) for j in range(self.source.dim)]
        out = np.stack([f(coords) for f in self._fns], axis=-1)
        return out[0] if single else out

    def jacobian(self, z) -> np.ndarray:
        """Complex Jacobian matrix df_a/dz_j at a single point, shape (m, n)."""
        z = as_point(z, self.source.dim)
        coords = [np.asarray(z[j]).reshape(1) for j in range(self.source.dim)]
        return np.array([[fn(coords)[0] for fn in row] for row in self._jac_fns],
                        dtype=complex)

    def push_direction(self, z, X) -> np.ndarray:
        """df_z(X), the image tangent direction."""
        return self.jacobian(z) @ as_point(X, self.source.dim)

    def is_constant(self) -> bool:
        return all(not c.free_symbols for c in self.components)

    def check_points(self, pts) -> None:
        """Raise unless every image point lies strictly inside the target."""
        img = self(np.atleast_2d(np.asarray(pts, dtype=complex)))
        ok = self.target.indicator(img)
        if not np.all(ok):
            bad = img[~ok][0]
            raise MapError(f"map {self.name or self.components} sends a point to "
                           f"{np.atleast_1d(bad).tolist()}, outside the target domain")

    def check_rule(self, rule: QuadRule) -> None:
        """Containment of the rule's node images, verified once per rule."""
        if id(rule) in self._checked_rules:
            return
        self.check_points(rule.nodes)
        self._checked_rules.add(id(rule))

    def to_json(self) -> dict:
        return {"components": [str(c) for c in self.components],
                "source": self.source.to_json(), "target": self.target.to_json()}


def identity_map(domain: DomainSpec, name: str = "identity") -> MapSpec:
    syms = _source_symbols(domain.dim)
    return MapSpec(source=domain, target=domain, components=tuple(syms), name=name,
                   certified_automorphism=True)


def constant_map(source: DomainSpec, target: DomainSpec, value, name: str = "constant") -> MapSpec:
    value = as_point(value, target.dim)
    if not target.contains(value):
        raise MapError("constant map value lies outside the target")
    comps = tuple(sp.sympify(complex(v)) for v in value)
    return MapSpec(source=source, target=target, components=comps, name=name)


def mobius_automorphism(domain: DomainSpec, params, name: str = "") -> MapSpec:
    """Coordinate-wise disc automorphism (z_j - a_j) / (1 - conj(a_j) z_j).

    Defined on the unit disc and on polydiscs (one parameter per coordinate);
    these are the package's only certified biholomorphisms.
    """
    params = np.atleast_1d(np.asarray(params, dtype=complex))
    if params.shape[0] != domain.dim:
        raise MapError("one Moebius parameter per coordinate is required")
    if np.any(np.abs(params) >= 1.0):
        raise MapError("Moebius parameters must lie inside the unit disc")
    disc_like = (domain.kind == "ball" and domain.dim == 1) or domain.kind == "polydisc"
    if not disc_like:
        raise MapError("coordinate-wise Moebius maps act on the disc or a polydisc")
    syms = _source_symbols(domain.dim)
    comps = tuple((s - complex(a)) / (1 - np.conjugate(complex(a)) * s)
                  for s, a in zip(syms, params))
    return MapSpec(source=domain, target=domain, components=comps,
                   name=name or f"mobius({params.tolist()})", certified_automorphism=True)


def jacobian_fd_gap(f: MapSpec, z, h: float = 1e-6) -> float:
    """Max gap between the symbolic Jacobian and central differences (test oracle)."""
    z = as_point(z, f.source.dim)
    exact = f.jacobian(z)
    fd = np.empty_like(exact)
    for j in range(f.source.dim):
        e = np.zeros_like(z)
        e[j] = h
        fd[:, j] = (f(z + e) - f(z - e)) / (2.0 * h)
    return float(np.max(np.abs(exact - fd)))
