"""Bounded domains in C^n.

Every inner product, kernel, metric, and moment in this package is an
integral over one of these domains with respect to Lebesgue measure on
R^(2n).  Domains are immutable value objects: hashable, JSON-round-trippable
(except for callable indicators), and safe to share between threads.

Points are plain complex numpy arrays of shape (n,); batches of points are
arrays of shape (..., n).  Tangent vectors carry their base point so metric
pairings can reject mismatched arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


def as_point(coords, dim: int | None = None) -> np.ndarray:
    """Coerce coords to a complex (n,) array, checking the dimension if given."""
    p = np.atleast_1d(np.asarray(coords, dtype=complex))
    if p.ndim != 1:
        raise ValueError(f"a point must be a flat coordinate sequence, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"point has {p.shape[0]} coordinates, domain has dimension {dim}")
    return p


@dataclass(frozen=True)
class TangentVector:
    """A (1,0)-tangent vector: base point plus direction components."""

    base: np.ndarray
    dir: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        object.__setattr__(self, "dir", as_point(self.dir))
        if self.base.shape != self.dir.shape:
            raise ValueError("tangent direction length must match its base point")

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.dir == 0))


def direction_of(X) -> np.ndarray:
    """Accept a TangentVector or a bare component sequence; return components."""
    if isinstance(X, TangentVector):
        return X.dir
    return as_point(X)


class DomainSpec:
    """Base class for bounded domains in C^n."""

    kind: str = "abstract"
    dim: int

    def indicator(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized open-domain membership test for points of shape (..., n)."""
        raise NotImplementedError

    def contains(self, p, margin: float = 0.0) -> bool:
        p = as_point(p, self.dim)
        if margin > 0.0:
            return bool(self._indicator_margin(p[None, :], margin)[0])
        return bool(self.indicator(p[None, :])[0])

    def _indicator_margin(self, pts: np.ndarray, margin: float) -> np.ndarray:
        return self.indicator(pts)

    def bounding_box(self) -> tuple[tuple[float, float], ...]:
        """Real bounding box, 2n intervals ordered (Re z_1, Im z_1, Re z_2, ...)."""
        raise NotImplementedError

    def volume(self) -> float | None:
        """Exact Lebesgue volume when known in closed form, else None."""
        return None

    def sample_interior(self, rng: np.random.Generator, count: int,
                        margin: float = 0.0) -> np.ndarray:
        """Rejection-sample `count` interior points, shape (count, n)."""
        box = np.asarray(self.bounding_box(), dtype=float)
        out = np.empty((count, self.dim), dtype=complex)
        have = 0
        attempts = 0
        while have < count:
            attempts += 1
            if attempts > 10000:
                raise RuntimeError(f"interior sampling failed on {self!r} (degenerate domain?)")
            draw = rng.uniform(box[:, 0], box[:, 1], size=(4 * count, 2 * self.dim))
            pts = draw[:, 0::2] + 1j * draw[:, 1::2]
            ok = self._indicator_margin(pts, margin) if margin > 0 else self.indicator(pts)
            good = pts[ok]
            take = min(count - have, good.shape[0])
            out[have:have + take] = good[:take]
            have += take
        return out

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(DomainSpec):
    """Unit ball {|z| < 1} in C^n; n = 1 is the unit disc."""

    dim: int = 1
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("ball dimension must be positive")

    def indicator(self, pts):
        return np.sum(np.abs(pts) ** 2, axis=-1) < 1.0

    def _indicator_margin(self, pts, margin):
        return np.sqrt(np.sum(np.abs(pts) ** 2, axis=-1)) < 1.0 - margin

    def bounding_box(self):
        return tuple(((-1.0, 1.0),) * (2 * self.dim))

    def volume(self):
        return math.pi ** self.dim / math.factorial(self.dim)

    def to_json(self):
        return {"kind": "ball", "dim": self.dim}


@dataclass(frozen=True)
class Polydisc(DomainSpec):
    """Unit polydisc {|z_j| < 1 for all j} in C^n."""

    dim: int = 1
    kind: str = field(default="polydisc", init=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("polydisc dimension must be positive")

    def indicator(self, pts):
        return np.all(np.abs(pts) < 1.0, axis=-1)

    def _indicator_margin(self, pts, margin):
        return np.all(np.abs(pts) < 1.0 - margin, axis=-1)

    def bounding_box(self):
        return tuple(((-1.0, 1.0),) * (2 * self.dim))

    def volume(self):
        return math.pi ** self.dim

    def to_json(self):
        return {"kind": "polydisc", "dim": self.dim}


@dataclass(frozen=True)
class Annulus(DomainSpec):
    """Annulus {r < |z| < 1} in C, 0 < r < 1."""

    r: float = 0.5
    kind: str = field(default="annulus", init=False)
    dim: int = field(default=1, init=False)

    def __post_init__(self):
        if not 0.0 < self.r < 1.0:
            raise ValueError("annulus inner radius must lie in (0, 1)")

    def indicator(self, pts):
        t = np.abs(pts[..., 0])
        return (t > self.r) & (t < 1.0)

    def _indicator_margin(self, pts, margin):
        t = np.abs(pts[..., 0])
        return (t > self.r + margin) & (t < 1.0 - margin)

    def bounding_box(self):
        return ((-1.0, 1.0), (-1.0, 1.0))

    def volume(self):
        return math.pi * (1.0 - self.r ** 2)

    def to_json(self):
        return {"kind": "annulus", "dim": 1, "r": self.r}


@dataclass(frozen=True)
class Product(DomainSpec):
    """Cartesian product of domains, coordinates concatenated in factor order."""

    factors: tuple[DomainSpec, ...]
    kind: str = field(default="product", init=False)

    def __post_init__(self):
        if not self.factors:
            raise ValueError("product needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    def factor_slices(self) -> list[slice]:
        out, start = [], 0
        for f in self.factors:
            out.append(slice(start, start + f.dim))
            start += f.dim
        return out

    def indicator(self, pts):
        ok = np.ones(pts.shape[:-1], dtype=bool)
        for f, sl in zip(self.factors, self.factor_slices()):
            ok &= f.indicator(pts[..., sl])
        return ok

    def _indicator_margin(self, pts, margin):
        ok = np.ones(pts.shape[:-1], dtype=bool)
        for f, sl in zip(self.factors, self.factor_slices()):
            ok &= f._indicator_margin(pts[..., sl], margin)
        return ok

    def bounding_box(self):
        box: tuple[tuple[float, float], ...] = ()
        for f in self.factors:
            box = box + f.bounding_box()
        return box

    def volume(self):
        vols = [f.volume() for f in self.factors]
        if any(v is None for v in vols):
            return None
        return math.prod(vols)

    def to_json(self):
        return {"kind": "product", "dim": self.dim,
                "factors": [f.to_json() for f in self.factors]}


@dataclass(frozen=True)
class General(DomainSpec):
    """Bounded domain given by an open-set indicator and a finite bounding box.

    The indicator receives a batch of points, shape (..., n), and must return
    a boolean array of shape (...).  The box has 2n finite real intervals in
    (Re z_1, Im z_1, ...) order.  No density guarantee is attached: numeric
    kernels on General domains assume polynomials are dense in A^2, which is
    a hypothesis, not a theorem.
    """

    dim: int
    box: tuple[tuple[float, float], ...]
    indicator_fn: Callable[[np.ndarray], np.ndarray]
    kind: str = field(default="general", init=False)

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != 2 * self.dim:
            raise ValueError("bounding box must have 2n real intervals")
        if not all(math.isfinite(lo) and math.isfinite(hi) and lo < hi for lo, hi in box):
            raise ValueError("bounding box must be finite with lo < hi")
        object.__setattr__(self, "box", box)

    def indicator(self, pts):
        ok = np.asarray(self.indicator_fn(pts), dtype=bool)
        if ok.shape != pts.shape[:-1]:
            raise ValueError("indicator returned wrong shape")
        return ok

    def bounding_box(self):
        return self.box

    def to_json(self):
        raise ValueError("General domains with callable indicators are not JSON-serializable; "
                         "use an expression-based scenario fragment instead")


def _general_from_expr(dim: int, box, expr: str) -> General:
    # Scenario-file escape hatch: indicator as a numpy expression over z[..., j].
    namespace = {"np": np, "abs": np.abs, "real": np.real, "imag": np.imag}

    def indicator(pts, _expr=expr):
        return eval(_expr, {"__builtins__": {}}, dict(namespace, z=pts))

    return General(dim=dim, box=tuple(tuple(iv) for iv in box), indicator_fn=indicator)


def domain_from_json(fragment: dict) -> DomainSpec:
    """Build a domain from its JSON fragment (see README for the schema)."""
    kind = fragment.get("kind")
    if kind == "ball":
        return Ball(int(fragment["dim"]))
    if kind == "polydisc":
        return Polydisc(int(fragment["dim"]))
    if kind == "annulus":
        return Annulus(float(fragment["r"]))
    if kind == "product":
        return Product(tuple(domain_from_json(f) for f in fragment["factors"]))
    if kind == "general":
        return _general_from_expr(int(fragment["dim"]), fragment["box"], fragment["indicator"])
    raise ValueError(f"unknown domain kind: {kind!r}")


def contains(domain: DomainSpec, p) -> bool:
    """True iff p lies in the open domain (dimension-checked)."""
    return domain.contains(p)


def unit_disc() -> Ball:
    return Ball(1)


def bidisc() -> Polydisc:
    return Polydisc(2)
