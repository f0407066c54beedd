"""Measure spaces, densities, random variables and expectations.

Two kinds of carrier are supported: a finite set of weighted points, and
Lebesgue measure on an interval [a, b] with b possibly infinite.  Intervals
are integrated with composite Gauss-Legendre panels; a semi-infinite
interval is first mapped to [0, 1) by x = a + t / (1 - t).  Densities
announce the points where they are not smooth (support cutoffs and kinks)
so that panel edges fall exactly on them.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DivergentIntegral
from .quadrature import composite_nodes

DEFAULT_PANELS = 256
_MAX_DOUBLINGS = 4
_DIVERGENCE_RATIO = 0.85


def default_panels() -> int:
    """Panel count from ``PHIFAM_PANELS`` if set, else 256."""
    raw = os.environ.get("PHIFAM_PANELS")
    if raw is None or raw.strip() == "":
        return DEFAULT_PANELS
    n = int(raw)
    if n < 16:
        raise ValueError("PHIFAM_PANELS must be at least 16")
    return n


def _parse_bound(b) -> float:
    if isinstance(b, str):
        if b.strip().lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ValueError(f"unrecognised interval bound {b!r}")
    return float(b)


@dataclass(frozen=True)
class MeasureSpace:
    """Either ``discrete`` (points with positive weights) or ``lebesgue`` on [a, b]."""

    kind: str
    points: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    a: float = 0.0
    b: float = math.inf
    panels: int = field(default_factory=default_panels)
    order: int = 8

    def __post_init__(self):
        if self.kind == "discrete":
            if len(self.points) == 0 or len(self.points) != len(self.weights):
                raise ValueError("discrete space needs equally many points and weights")
            if any(not (w > 0) for w in self.weights):
                raise ValueError("discrete weights must be positive")
            if len(set(self.points)) != len(self.points):
                raise ValueError("discrete points must be distinct")
        elif self.kind == "lebesgue":
            if not (self.a < self.b) or math.isinf(self.a):
                raise ValueError("lebesgue interval needs finite a < b")
            if self.panels < 16:
                raise ValueError("panels must be at least 16")
        else:
            raise ValueError(f"unknown measure kind {self.kind!r}")

    # constructors -----------------------------------------------------------
    @classmethod
    def discrete(cls, points: Sequence[float], weights: Sequence[float] | None = None) -> "MeasureSpace":
        pts = tuple(float(p) for p in points)
        ws = tuple(float(w) for w in weights) if weights is not None else (1.0,) * len(pts)
        return cls("discrete", pts, ws)

    @classmethod
    def lebesgue(cls, a: float = 0.0, b: float = math.inf, panels: int | None = None) -> "MeasureSpace":
        return cls("lebesgue", a=float(a), b=_parse_bound(b), panels=panels or default_panels())

    @classmethod
    def from_spec(cls, spec: dict, panels: int | None = None) -> "MeasureSpace":
        kind = spec.get("kind")
        if kind == "discrete":
            return cls.discrete(spec["points"], spec.get("weights"))
        if kind == "lebesgue":
            return cls.lebesgue(spec.get("a", 0.0), spec.get("b", "inf"), panels or spec.get("panels"))
        raise ValueError(f"unknown measure kind {kind!r}")

    def to_spec(self) -> dict:
        if self.kind == "discrete":
            return {"kind": "discrete", "points": list(self.points), "weights": list(self.weights)}
        return {"kind": "lebesgue", "a": self.a, "b": "inf" if math.isinf(self.b) else self.b}

    def with_panels(self, panels: int) -> "MeasureSpace":
        if self.kind == "discrete":
            return self
        return MeasureSpace("lebesgue", a=self.a, b=self.b, panels=int(panels), order=self.order)

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    @property
    def total_mass(self) -> float:
        if self.is_discrete:
            return float(sum(self.weights))
        return self.b - self.a

    # quadrature -------------------------------------------------------------
    def _to_t(self, x: np.ndarray) -> np.ndarray:
        d = x - self.a
        return d / (1.0 + d)

    def _from_t(self, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        one_minus = 1.0 - t
        return self.a + t / one_minus, 1.0 / one_minus**2

    def nodes(self, breakpoints: Iterable[float] = (), panels: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and weights; panel edges include every breakpoint."""
        if self.is_discrete:
            return np.asarray(self.points, dtype=float), np.asarray(self.weights, dtype=float)
        panels = panels or self.panels
        infinite = math.isinf(self.b)
        bps = np.asarray([float(c) for c in breakpoints], dtype=float)
        bps = bps[np.isfinite(bps) & (bps > self.a) & (bps < self.b)]
        if infinite:
            lo, hi = 0.0, 1.0
            cuts = self._to_t(bps)
        else:
            lo, hi = self.a, self.b
            cuts = bps
        edges = np.unique(np.concatenate([[lo, hi], cuts]))
        # drop slivers that would only create degenerate panels
        keep = np.concatenate([[True], np.diff(edges) > 1e-15 * (hi - lo)])
        edges = edges[keep]
        edges[-1] = hi
        nseg = len(edges) - 1
        if nseg <= 4:
            counts = np.full(nseg, panels)
        else:
            counts = np.maximum(16, np.ceil(panels * np.diff(edges) / (hi - lo))).astype(int)
        fine = np.concatenate(
            [np.linspace(e0, e1, c + 1)[:-1] for e0, e1, c in zip(edges[:-1], edges[1:], counts)] + [[hi]]
        )
        t, w = composite_nodes(fine, self.order)
        if infinite:
            x, jac = self._from_t(t)
            return x, w * jac
        return t, w

    def integrate(
        self,
        f: Callable[[np.ndarray], np.ndarray],
        breakpoints: Iterable[float] = (),
        check: bool = False,
        rtol: float = 1e-9,
    ) -> float:
        """Integrate ``f`` against the measure.

        With ``check`` the panel count is doubled until successive values
        agree to ``rtol``; values whose successive differences stop shrinking
        (ratio above 0.85) are reported as DivergentIntegral.
        """
        bps = tuple(breakpoints)
        x, w = self.nodes(bps)
        value = _weighted_sum(f, x, w)
        if not check or self.is_discrete:
            if not math.isfinite(value):
                raise DivergentIntegral("integrand is not finite on the quadrature nodes", quantity="integral")
            return value
        if not math.isfinite(value):
            raise DivergentIntegral("integrand is not finite on the quadrature nodes", quantity="integral")
        prev_diff = None
        step = 0.0
        ratio = 0.0
        panels = self.panels
        for _ in range(_MAX_DOUBLINGS):
            panels *= 2
            x, w = self.nodes(bps, panels)
            finer = _weighted_sum(f, x, w)
            if not math.isfinite(finer):
                raise DivergentIntegral("integrand is not finite on the quadrature nodes", quantity="integral")
            step = finer - value
            diff = abs(step)
            value = finer
            if diff <= rtol * abs(value) or diff <= 1e-13:
                return value
            if prev_diff is not None and prev_diff > 0 and diff / prev_diff > _DIVERGENCE_RATIO:
                raise DivergentIntegral(
                    f"integral keeps growing under panel refinement (last change {diff:.3g})",
                    quantity="integral",
                    tolerance=rtol,
                )
            if prev_diff:
                ratio = diff / prev_diff
            prev_diff = diff
        # slow but convergent (integrable endpoint singularity): sum the geometric remainder
        return value + step * ratio / (1.0 - ratio)


def _weighted_sum(f, x: np.ndarray, w: np.ndarray) -> float:
    with np.errstate(invalid="ignore", over="ignore"):
        vals = np.asarray(f(x), dtype=float)
    if vals.ndim == 0:
        vals = np.full(x.shape, float(vals))
    if np.any(~np.isfinite(vals[w > 0])):
        return math.inf
    return float(w @ vals)


# ---------------------------------------------------------------------------
# Random variables
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RandomVariable:
    """A real function on the sample space, vectorized over numpy arrays."""

    fn: Callable[[np.ndarray], np.ndarray]
    label: str = ""
    spec: dict | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.fn(x), dtype=float)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return out

    @classmethod
    def monomial(cls, scale: float = 1.0, degree: float = 1.0) -> "RandomVariable":
        s, d = float(scale), float(degree)
        if d == 0:
            fn = lambda x: np.full_like(x, s)  # noqa: E731
        else:
            fn = lambda x: s * x**d  # noqa: E731
        return cls(fn, f"{s:g}*x^{d:g}", {"kind": "monomial", "scale": s, "degree": d})

    @classmethod
    def constant(cls, value: float = 1.0) -> "RandomVariable":
        v = float(value)
        return cls(lambda x: np.full_like(x, v), f"{v:g}", {"kind": "constant", "value": v})

    @classmethod
    def table(cls, points: Sequence[float], values: Sequence[float]) -> "RandomVariable":
        """Pointwise values for a discrete space; zero off the listed points."""
        lookup = _PointLookup(points, values)
        return cls(lookup, "table", {"kind": "table", "points": list(map(float, points)), "values": list(map(float, values))})

    @classmethod
    def from_spec(cls, spec: dict) -> "RandomVariable":
        kind = spec.get("kind")
        if kind == "monomial":
            return cls.monomial(spec.get("scale", 1.0), spec.get("degree", 1.0))
        if kind == "constant":
            return cls.constant(spec.get("value", 1.0))
        if kind == "table":
            return cls.table(spec["points"], spec["values"])
        raise ValueError(f"unknown random variable kind {kind!r}")

    def __add__(self, other: "RandomVariable") -> "RandomVariable":
        return RandomVariable(lambda x: self(x) + other(x), f"({self.label})+({other.label})")

    def __sub__(self, other: "RandomVariable") -> "RandomVariable":
        return RandomVariable(lambda x: self(x) - other(x), f"({self.label})-({other.label})")

    def __mul__(self, other) -> "RandomVariable":
        if isinstance(other, RandomVariable):
            return RandomVariable(lambda x: self(x) * other(x), f"({self.label})*({other.label})")
        c = float(other)
        return RandomVariable(lambda x: c * self(x), f"{c:g}*({self.label})")

    __rmul__ = __mul__


class _PointLookup:
    def __init__(self, points: Sequence[float], values: Sequence[float]):
        pts = np.asarray(points, dtype=float)
        vals = np.asarray(values, dtype=float)
        if pts.shape != vals.shape:
            raise ValueError("points and values must have the same length")
        order = np.argsort(pts)
        self.points = pts[order]
        self.values = vals[order]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.points, x), 0, len(self.points) - 1)
        hit = self.points[idx] == x
        return np.where(hit, self.values[idx], 0.0)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Pdf:
    """A nonnegative density on ``space`` with its known non-smooth points."""

    space: MeasureSpace
    density: Callable[[np.ndarray], np.ndarray]
    breakpoints: tuple[float, ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.density(x), dtype=float), x.shape)

    @classmethod
    def tabulated(cls, space: MeasureSpace, values: Sequence[float]) -> "Pdf":
        if not space.is_discrete:
            raise ValueError("tabulated densities need a discrete space")
        if len(values) != len(space.points):
            raise ValueError("one value per point is required")
        return cls(space, _PointLookup(space.points, values))

    @classmethod
    def uniform(cls, a: float, b: float, space: MeasureSpace | None = None) -> "Pdf":
        space = space or MeasureSpace.lebesgue(a, b)
        h = 1.0 / (b - a)
        return cls(space, lambda x: np.where((x >= a) & (x <= b), h, 0.0), (a, b))

    def nodes(self, extra_breakpoints: Iterable[float] = ()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, w = self.space.nodes((*self.breakpoints, *extra_breakpoints))
        return x, w, self(x)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray], check: bool = False) -> float:
        """int f(x) p(x) dmu(x)."""
        return self.space.integrate(lambda x: self(x) * f(x), self.breakpoints, check=check)

    def mixture(self, other: "Pdf", lam: float) -> "Pdf":
        """(1 - lam) * self + lam * other."""
        if other.space != self.space:
            raise ValueError("mixture components must share a space")
        lam = float(lam)
        return Pdf(self.space, lambda x: (1.0 - lam) * self(x) + lam * other(x), (*self.breakpoints, *other.breakpoints))


def expectation(p: Pdf, f: RandomVariable | Callable, check: bool = True) -> float:
    """E_p f, with divergence detection under panel refinement."""
    return p.integrate(f, check=check)


def normalization_residual(p: Pdf) -> float:
    """int p dmu - 1."""
    return p.space.integrate(p, p.breakpoints) - 1.0
