"""Deformed logarithms and exponentials generated by a deformer phi.

A deformer is a positive, non-decreasing function on (0, inf).  From it we
build

    ln_phi(u)  = int_1^u dv / phi(v)
    exp_phi    = inverse of ln_phi, extended by 0 below m and +inf above M
    psi(y)     = phi(exp_phi(y))
    chi(v)     = 1 / int_0^{1/v} u / phi(u) du

together with the two moment integrals used by the entropy functionals,
``moment(w) = int_0^w u/phi(u) du`` and ``moment_from_one(u) = int_1^u v/phi(v) dv``.

Power, scaled-power, constant, ceiling and table deformers have closed
forms.  Any deformer can also be run through the generic numeric route
(adaptive quadrature for the integrals, bracketed bisection plus Newton
polish for the inverse) by passing ``numeric=True``; custom callables always
use it.

Convention at jumps: phi is evaluated exactly as defined, so the ceiling
deformer returns ceil(u) at integers.  Jump points carry zero Lebesgue
measure and do not affect any integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import digamma

from .errors import DivergentMoment, NonPositiveInput
from .quadrature import adaptive_gl, improper_tail

KINDS = ("power", "scaled_power", "constant", "ceiling", "table", "custom")
_EULER = 0.5772156649015329
_MAX_KINKS = 10_000


def _scalar_or_array(x: np.ndarray, scalar: bool):
    return float(x) if scalar else x


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


# ---------------------------------------------------------------------------
# Deformer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Deformer:
    """The generating function phi.

    ``kind`` is one of power (u**q), scaled_power (u**(2-q)/q), constant (1),
    ceiling (smallest integer >= u), table (piecewise linear through
    ``knots``) or custom (an arbitrary vectorized callable).
    """

    kind: str
    q: float | None = None
    knots: tuple[tuple[float, float], ...] = ()
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown deformer kind {self.kind!r}")
        if self.kind == "power":
            if self.q is None or not self.q > 0:
                raise ValueError("power deformer needs q > 0")
        elif self.kind == "scaled_power":
            # q = 2 is the constant deformer 1/2; it is kept because chi(v) = v^2 is a useful check
            if self.q is None or not 0 < self.q <= 2:
                raise ValueError("scaled_power deformer needs 0 < q <= 2")
        elif self.kind == "table":
            object.__setattr__(self, "knots", tuple((float(u), float(p)) for u, p in self.knots))
            _validate_table(self.knots)
        elif self.kind == "custom" and self.func is None:
            raise ValueError("custom deformer needs a callable")

    # constructors -----------------------------------------------------
    @classmethod
    def power(cls, q: float) -> "Deformer":
        return cls("power", q=float(q))

    @classmethod
    def scaled_power(cls, q: float) -> "Deformer":
        return cls("scaled_power", q=float(q))

    @classmethod
    def constant(cls) -> "Deformer":
        return cls("constant")

    @classmethod
    def ceiling(cls) -> "Deformer":
        return cls("ceiling")

    @classmethod
    def table(cls, knots: Sequence[Sequence[float]]) -> "Deformer":
        return cls("table", knots=tuple(tuple(k) for k in knots))

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], knots: Sequence[float] = ()) -> "Deformer":
        return cls("custom", knots=tuple((float(k), math.nan) for k in knots), func=func)

    @classmethod
    def from_spec(cls, spec: dict) -> "Deformer":
        kind = spec.get("kind")
        if kind in ("power", "scaled_power"):
            return cls(kind, q=float(spec["q"]))
        if kind in ("constant", "ceiling"):
            return cls(kind)
        if kind == "table":
            return cls.table(spec["knots"])
        raise ValueError(f"cannot build a deformer from {spec!r}")

    def to_spec(self) -> dict:
        if self.kind in ("power", "scaled_power"):
            return {"kind": self.kind, "q": self.q}
        if self.kind == "table":
            return {"kind": "table", "knots": [list(k) for k in self.knots]}
        if self.kind == "custom":
            raise ValueError("custom deformers have no JSON form")
        return {"kind": self.kind}

    # evaluation -------------------------------------------------------
    def __call__(self, u):
        u, scalar = _as_array(u)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "power":
                out = u ** self.q
            elif self.kind == "scaled_power":
                out = u ** (2.0 - self.q) / self.q
            elif self.kind == "constant":
                out = np.ones_like(u)
            elif self.kind == "ceiling":
                out = np.ceil(u)
            elif self.kind == "table":
                s, a, b = _table_pieces(self.knots)
                j = np.clip(np.searchsorted(s, u, side="right") - 1, 0, len(s) - 1)
                out = a[j] + b[j] * (u - s[j])
            else:
                out = np.asarray(self.func(u), dtype=float) * np.ones_like(u)
        return _scalar_or_array(out, scalar)

    def kinks(self, lo: float, hi: float) -> np.ndarray:
        """Points in (lo, hi) where phi is not smooth."""
        if self.kind == "ceiling":
            first = max(1, math.floor(lo) + 1)
            last = math.ceil(hi) - 1 if math.isfinite(hi) else first + _MAX_KINKS
            last = min(last, first + _MAX_KINKS)
            return np.arange(first, last + 1, dtype=float)
        if self.kind in ("table", "custom"):
            pts = np.array([k[0] for k in self.knots], dtype=float)
            return pts[(pts > lo) & (pts < hi)]
        return np.empty(0)


def _validate_table(knots) -> None:
    if not knots:
        raise ValueError("table deformer needs at least one knot")
    u = np.array([k[0] for k in knots])
    p = np.array([k[1] for k in knots])
    if u[0] < 0 or np.any(np.diff(u) <= 0):
        raise ValueError("table knots must be sorted, distinct and non-negative")
    if np.any(np.diff(p) < 0):
        raise ValueError("table deformer must be non-decreasing")
    if np.any(p[u > 0] <= 0) or p[0] < 0:
        raise ValueError("table deformer must be positive on (0, inf)")
    if p[0] == 0 and (len(p) < 2):
        raise ValueError("table deformer vanishes on an interval")


def _table_pieces(knots) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Piece starts, values and slopes; constant left of the first knot, last slope continued on the right."""
    u = np.array([k[0] for k in knots])
    p = np.array([k[1] for k in knots])
    slopes = np.diff(p) / np.diff(u) if len(u) > 1 else np.zeros(0)
    last = slopes[-1] if len(slopes) else 0.0
    s = u.copy()
    a = p.copy()
    b = np.append(slopes, last)
    if u[0] > 0:
        s = np.insert(s, 0, 0.0)
        a = np.insert(a, 0, p[0])
        b = np.insert(b, 0, 0.0)
    return s, a, b


# ---------------------------------------------------------------------------
# closed-form helpers
# ---------------------------------------------------------------------------


def _ln_q(u: np.ndarray, q: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if q == 1.0:
            return np.log(u)
        r = 1.0 - q
        return np.expm1(r * np.log(u)) / r


def _q_power(y: np.ndarray, q: float, power: float) -> np.ndarray:
    """[1 + (1-q) y]_+ ** (power / (1-q)), with +inf above the pole for q > 1."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if q == 1.0:
            return np.exp(power * y)
        r = 1.0 - q
        base = r * y
        inside = base > -1.0
        out = np.exp(power * np.log1p(np.where(inside, base, 0.0)) / r)
        return np.where(inside, out, 0.0 if q < 1.0 else np.inf)


def _x_minus_log1p(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    series = np.zeros_like(x)
    term = x * x
    for k in range(2, 12):
        series += ((-1) ** k) * term / k
        term = term * x
    with np.errstate(invalid="ignore"):
        direct = x - np.log1p(x)
    return np.where(small, series, direct)


def harmonic(n) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return digamma(n + 1.0) + _EULER


# ---------------------------------------------------------------------------
# kernels: one per closed-form family, plus the generic numeric kernel
# ---------------------------------------------------------------------------


class _PowerKernel:
    """phi(u) = u**q."""

    def __init__(self, q: float):
        self.q = q
        self.m = -1.0 / (1.0 - q) if q < 1.0 else -math.inf
        self.M = 1.0 / (q - 1.0) if q > 1.0 else math.inf

    def ln(self, u):
        return _ln_q(u, self.q)

    def exp(self, y):
        return _q_power(y, self.q, 1.0)

    def psi(self, y):
        return _q_power(y, self.q, self.q)

    def moment(self, w):
        if self.q >= 2.0:
            raise DivergentMoment(f"int_0^1 u/phi(u) du diverges for power q={self.q}", quantity="chi")
        return w ** (2.0 - self.q) / (2.0 - self.q)

    def moment_from_one(self, u):
        return _ln_q(u, self.q - 1.0)

    def ln_chi(self, w):
        if self.q >= 2.0:
            raise DivergentMoment(f"chi undefined for power q={self.q}", quantity="chi")
        return _ln_q(w, 2.0 - self.q) / (2.0 - self.q)


class _ScaledPowerKernel:
    """phi(u) = u**(2-q) / q, a rescaled power deformer with exponent r = 2-q."""

    def __init__(self, q: float):
        self.q = q
        self.inner = _PowerKernel(2.0 - q)
        self.m = q * self.inner.m
        self.M = q * self.inner.M

    def ln(self, u):
        return self.q * self.inner.ln(u)

    def exp(self, y):
        return self.inner.exp(np.asarray(y) / self.q)

    def psi(self, y):
        return self.inner.psi(np.asarray(y) / self.q) / self.q

    def moment(self, w):
        return w ** self.q

    def moment_from_one(self, u):
        return self.q * _ln_q(u, 1.0 - self.q)

    def ln_chi(self, w):
        return _ln_q(w, self.q)


class _ConstantKernel:
    m = -1.0
    M = math.inf

    def ln(self, u):
        return u - 1.0

    def exp(self, y):
        return np.maximum(1.0 + y, 0.0)

    def psi(self, y):
        return np.where(y > -1.0, 1.0, 0.0)

    def moment(self, w):
        return 0.5 * w * w

    def moment_from_one(self, u):
        return 0.5 * (u * u - 1.0)

    def ln_chi(self, w):
        with np.errstate(divide="ignore"):
            return 0.5 * (1.0 - 1.0 / w)


class _CeilingKernel:
    """phi(u) = ceil(u); ln_phi is piecewise linear with harmonic-number corners."""

    m = -1.0
    M = math.inf
    ln_chi = None

    def ln(self, u):
        n = np.ceil(u)
        with np.errstate(invalid="ignore"):
            upper = harmonic(n - 1.0) - 1.0 + (u - n + 1.0) / n
        return np.where(u <= 1.0, u - 1.0, upper)

    def _corner_index(self, y: np.ndarray) -> np.ndarray:
        # n >= 2 with H_{n-1} - 1 < y <= H_n - 1
        with np.errstate(over="ignore"):
            n = np.maximum(2.0, np.floor(np.exp(np.minimum(y, 700.0) + 1.0 - _EULER)))
        for _ in range(64):
            up = harmonic(n) - 1.0 < y
            down = (harmonic(n - 1.0) - 1.0 >= y) & (n > 2)
            if not (up.any() or down.any()):
                break
            n = n + up - down
        return n

    def exp(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y <= -1.0, 0.0, 1.0 + y)
        hi = y > 0.0
        if hi.any():
            yh = y[hi]
            n = self._corner_index(yh)
            out[hi] = n - 1.0 + (yh - (harmonic(n - 1.0) - 1.0)) * n
        return out

    def psi(self, y):
        return np.where(np.asarray(y) <= -1.0, 0.0, np.ceil(self.exp(y)))

    def moment(self, w):
        w = np.asarray(w, dtype=float)
        n = np.ceil(w)
        with np.errstate(invalid="ignore", divide="ignore"):
            upper = (n - 1.0) - 0.5 * harmonic(n - 1.0) + (w * w - (n - 1.0) ** 2) / (2.0 * n)
        return np.where(w <= 1.0, 0.5 * w * w, upper)

    def moment_from_one(self, u):
        return self.moment(u) - 0.5


class _TableKernel:
    """Piecewise-linear phi; every integral is elementary on each piece."""

    ln_chi = None

    def __init__(self, knots):
        s, a, b = _table_pieces(knots)
        self.s, self.a, self.b = s, a, b
        n = len(s)
        self.j1 = j1 = int(np.searchsorted(s, 1.0, side="right") - 1)
        # C[j] = ln_phi(s[j]), anchored at u = 1; C[0] = -inf when phi(0) = 0
        C = np.zeros(n)
        C[j1] = -float(self._seg(j1, s[j1], 1.0))
        if j1 + 1 < n:
            C[j1 + 1] = float(self._seg(j1, 1.0, s[j1 + 1]))
        for j in range(j1 + 2, n):
            C[j] = C[j - 1] + float(self._seg(j - 1, s[j - 1], s[j]))
        for j in range(j1 - 1, -1, -1):
            C[j] = C[j + 1] - float(self._seg(j, s[j], s[j + 1]))
        self.C = C
        self.m = float(C[0])
        self.M = math.inf
        # moment integral at piece starts, anchored at 0
        K = np.zeros(n)
        for j in range(1, n):
            K[j] = K[j - 1] + float(self._piece_moment(j - 1, np.array(s[j])))
        self.K = K

    def _seg(self, j, x, y):
        """int_x^y dv / phi(v) inside piece j."""
        s, a, b = self.s[j], self.a[j], self.b[j]
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if b == 0.0:
                return (y - x) / a
            if a == 0.0:
                return np.log(y / x) / b
            return np.log1p(b * (y - x) / (a + b * (x - s))) / b

    def _piece_moment(self, j, u):
        s, a, b = self.s[j], self.a[j], self.b[j]
        d = u - s
        if b == 0.0:
            return (s * d + 0.5 * d * d) / a
        if a == 0.0:
            return d / b
        x = b * d / a
        return (a / (b * b)) * _x_minus_log1p(x) + (s / b) * np.log1p(x)

    def _piece(self, u):
        return np.clip(np.searchsorted(self.s, u, side="right") - 1, 0, len(self.s) - 1)

    def ln(self, u):
        u = np.asarray(u, dtype=float)
        j = self._piece(u)
        out = np.empty_like(u)
        for jj in np.unique(j):
            sel = j == jj
            uu = u[sel]
            if jj == self.j1:
                out[sel] = self._seg(jj, 1.0, uu)
            elif jj > self.j1:
                out[sel] = self.C[jj] + self._seg(jj, self.s[jj], uu)
            else:
                out[sel] = self.C[jj + 1] - self._seg(jj, uu, self.s[jj + 1])
        return out

    def exp(self, y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        live = y > self.m
        j = np.clip(np.searchsorted(self.C, y, side="right") - 1, 0, len(self.s) - 1)
        for jj in np.unique(j[live]):
            sel = live & (j == jj)
            s, a, b = self.s[jj], self.a[jj], self.b[jj]
            if a == 0.0:
                # phi = b v near the origin: ln_phi(u) = C[1] - log(s[1]/u)/b
                out[sel] = self.s[1] * np.exp(b * (y[sel] - self.C[1]))
                continue
            d = y[sel] - self.C[jj]
            out[sel] = s + (a * d if b == 0.0 else (a / b) * np.expm1(b * d))
        return out

    def psi(self, y):
        y = np.asarray(y, dtype=float)
        v = self.exp(y)
        s, a, b = self.s, self.a, self.b
        j = self._piece(v)
        return np.where(y > self.m, a[j] + b[j] * (v - s[j]), 0.0)

    def moment(self, w):
        w = np.asarray(w, dtype=float)
        j = self._piece(w)
        out = np.empty_like(w)
        for jj in np.unique(j):
            sel = j == jj
            out[sel] = self.K[jj] + self._piece_moment(jj, w[sel])
        return out

    def moment_from_one(self, u):
        return self.moment(u) - self.moment(np.array(1.0))


class _NumericKernel:
    """Generic route: adaptive quadrature of 1/phi and u/phi, bracketed inversion."""

    ln_chi = None

    def __init__(self, deformer: Deformer, qtol: float, itol: float):
        self.phi = deformer
        self.qtol = qtol
        self.itol = itol
        inv = self._inv
        below, ok_lo = improper_tail(inv, 1.0, "zero", tol=qtol, breakpoints=deformer.kinks(0.0, 1.0))
        above, ok_hi = improper_tail(inv, 1.0, "inf", tol=qtol, breakpoints=deformer.kinks(1.0, 2.0**61))
        self.m = -below if ok_lo else -math.inf
        self.M = above if ok_hi else math.inf

    def _inv(self, v):
        return 1.0 / self.phi(v)

    def _ratio(self, v):
        return v / self.phi(v)

    def _cumulative(self, f, pts, kinks_of) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        flat = pts.ravel()
        grid = np.unique(np.concatenate([flat, [1.0]]))
        anchor = int(np.searchsorted(grid, 1.0))
        seg = np.array([
            adaptive_gl(f, lo, hi, self.qtol * 1e-2, kinks_of(lo, hi))
            for lo, hi in zip(grid[:-1], grid[1:])
        ])
        cum = np.zeros(len(grid))
        if anchor < len(seg):
            cum[anchor + 1:] = np.cumsum(seg[anchor:])
        if anchor > 0:
            cum[:anchor] = -np.cumsum(seg[:anchor][::-1])[::-1]
        return cum[np.searchsorted(grid, flat)].reshape(pts.shape)

    def ln(self, u):
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, self.m)
        pos = u > 0
        if pos.any():
            out[pos] = self._cumulative(self._inv, u[pos], self.phi.kinks)
        return out

    @cached_property
    def moment_at_one(self) -> float:
        val, ok = improper_tail(self._ratio, 1.0, "zero", tol=self.qtol, breakpoints=self.phi.kinks(0.0, 1.0))
        if not ok:
            raise DivergentMoment("int_0^1 u/phi(u) du diverges", quantity="chi", tolerance=self.qtol)
        return val

    def moment_from_one(self, u):
        u = np.asarray(u, dtype=float)
        out = np.empty(u.shape)
        pos = u > 0
        out[pos] = self._cumulative(self._ratio, u[pos], self.phi.kinks)
        if (~pos).any():
            try:
                out[~pos] = -self.moment_at_one
            except DivergentMoment:
                out[~pos] = -math.inf
        return out

    def moment(self, w):
        return self.moment_at_one + self.moment_from_one(w)

    def _exp_scalar(self, y: float) -> float:
        if y <= self.m:
            return 0.0
        if y >= self.M:
            return math.inf
        if y == 0.0:
            return 1.0
        inv, kinks = self._inv, self.phi.kinks

        def step(lo, hi):
            return adaptive_gl(inv, lo, hi, self.qtol * 1e-2, kinks(lo, hi))

        lo = hi = 1.0
        l_lo = l_hi = 0.0
        if y > 0:
            while l_hi < y:
                lo, l_lo = hi, l_hi
                hi = 2.0 * hi
                l_hi = l_lo + step(lo, hi)
        else:
            while l_lo > y:
                hi, l_hi = lo, l_lo
                lo = 0.5 * lo
                l_lo = l_hi - step(lo, hi)
        while hi - lo > self.itol * max(1.0, lo):
            mid = 0.5 * (lo + hi)
            l_mid = l_lo + step(lo, mid)
            if l_mid < y:
                lo, l_lo = mid, l_mid
            else:
                hi, l_hi = mid, l_mid
        v = 0.5 * (lo + hi)
        l_v = l_lo + step(lo, v)
        for _ in range(3):
            nxt = v - (l_v - y) * float(self.phi(v))
            if not lo <= nxt <= hi or nxt == v:
                break
            l_v += step(v, nxt)
            v = nxt
        return v

    def exp(self, y):
        y = np.asarray(y, dtype=float)
        return np.vectorize(self._exp_scalar, otypes=[float])(y) if y.size else y.copy()

    def psi(self, y):
        y = np.asarray(y, dtype=float)
        v = self.exp(y)
        with np.errstate(invalid="ignore"):
            val = np.asarray(self.phi(np.where(np.isfinite(v) & (v > 0), v, 1.0)), dtype=float)
        return np.where(y <= self.m, 0.0, np.where(y >= self.M, np.inf, val))


# ---------------------------------------------------------------------------
# DeformedCalculus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeformedCalculus:
    """All derived machinery for one deformer.  Immutable and thread-safe."""

    deformer: Deformer
    quadrature_tol: float = 1e-9
    inversion_tol: float = 1e-10
    numeric: bool = False

    def __post_init__(self):
        object.__setattr__(self, "_kernel", self._make_kernel())

    def _make_kernel(self):
        d = self.deformer
        if self.numeric or d.kind == "custom":
            return _NumericKernel(d, self.quadrature_tol, self.inversion_tol)
        if d.kind == "power":
            return _PowerKernel(d.q)
        if d.kind == "scaled_power":
            return _ScaledPowerKernel(d.q)
        if d.kind == "constant":
            return _ConstantKernel()
        if d.kind == "ceiling":
            return _CeilingKernel()
        return _TableKernel(d.knots)

    @classmethod
    def from_spec(cls, spec: dict, **kw) -> "DeformedCalculus":
        return cls(Deformer.from_spec(spec), **kw)

    # range ----------------------------------------------------------------
    @property
    def m(self) -> float:
        return float(self._kernel.m)

    @property
    def M(self) -> float:
        return float(self._kernel.M)

    def range_bounds(self) -> tuple[float, float]:
        """(inf, sup) of ln_phi over (0, inf); either may be infinite."""
        return self.m, self.M

    # core maps -------------------------------------------------------------
    def phi(self, u):
        return self.deformer(u)

    def ln_phi(self, u):
        u, scalar = _as_array(u)
        if np.any(u <= 0) or np.any(np.isnan(u)):
            raise NonPositiveInput("ln_phi needs u > 0", quantity="u")
        return _scalar_or_array(np.asarray(self._kernel.ln(u), dtype=float), scalar)

    def _ln0(self, u: np.ndarray) -> np.ndarray:
        """ln_phi extended by its limit m at u = 0."""
        u = np.asarray(u, dtype=float)
        out = np.full(u.shape, self.m)
        pos = u > 0
        if pos.any():
            out[pos] = self._kernel.ln(u[pos])
        return out

    def exp_phi(self, y):
        y, scalar = _as_array(y)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.asarray(self._kernel.exp(y), dtype=float)
        out = np.where(y <= self.m, 0.0, np.where(y >= self.M, np.inf, out))
        return _scalar_or_array(out, scalar)

    def psi(self, y):
        y, scalar = _as_array(y)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.asarray(self._kernel.psi(y), dtype=float)
        out = np.where(y <= self.m, 0.0, np.where(y >= self.M, np.inf, out))
        return _scalar_or_array(out, scalar)

    # moment integrals --------------------------------------------------------
    def moment(self, w):
        """int_0^w u / phi(u) du; raises DivergentMoment when it diverges at 0."""
        w, scalar = _as_array(w)
        return _scalar_or_array(np.asarray(self._kernel.moment(w), dtype=float), scalar)

    def moment_from_one(self, u):
        """int_1^u v / phi(v) dv, finite for every u > 0."""
        u, scalar = _as_array(u)
        return _scalar_or_array(np.asarray(self._kernel.moment_from_one(u), dtype=float), scalar)

    @cached_property
    def moment_at_one(self) -> float:
        """int_0^1 u/phi(u) du, which equals 1/chi(1)."""
        return float(self.moment(1.0))

    def chi(self, v):
        v, scalar = _as_array(v)
        if np.any(v <= 0):
            raise NonPositiveInput("chi needs v > 0", quantity="v")
        with np.errstate(divide="ignore"):
            out = 1.0 / np.asarray(self.moment(1.0 / v), dtype=float)
        return _scalar_or_array(out, scalar)

    def ln_chi(self, w):
        """int_1^w dv / chi(v) = int_1^w moment(1/v) dv."""
        w, scalar = _as_array(w)
        if np.any(w <= 0):
            raise NonPositiveInput("ln_chi needs w > 0", quantity="w")
        self.moment_at_one  # surfaces DivergentMoment early
        closed = getattr(self._kernel, "ln_chi", None)
        if closed is not None and not self.numeric:
            return _scalar_or_array(np.asarray(closed(w), dtype=float), scalar)

        def integrand(v):
            return np.asarray(self.moment(1.0 / v), dtype=float)

        def kinks(lo, hi):
            k = self.deformer.kinks(1.0 / hi, 1.0 / lo)
            return 1.0 / k[k > 0]

        flat = w.ravel()
        out = np.array([
            adaptive_gl(integrand, 1.0, float(x), self.quadrature_tol * 1e-3, kinks(min(1.0, x), max(1.0, x)))
            for x in flat
        ])
        return _scalar_or_array(out.reshape(w.shape), scalar)

    def ln_phi_integral(self, p):
        """int_0^p ln_phi(u) du = p ln_phi(p) - moment(p), zero at p = 0."""
        p, scalar = _as_array(p)
        pos = p > 0
        out = np.zeros(p.shape)
        if pos.any():
            pp = p[pos]
            out[pos] = pp * self._kernel.ln(pp) - self._kernel.moment(pp)
        return _scalar_or_array(out, scalar)

    def ln_phi_antiderivative(self, p):
        """u ln_phi(u) - moment_from_one(u): an antiderivative of ln_phi vanishing at 1.

        Finite for every u > 0 even when the moment integral diverges at 0.
        At u = 0 it takes its limit, which is -inf-safe: +inf when the
        integral of ln_phi diverges at the origin.
        """
        p, scalar = _as_array(p)
        pos = p > 0
        out = np.empty(p.shape)
        if pos.any():
            pp = p[pos]
            out[pos] = pp * self._kernel.ln(pp) - self._kernel.moment_from_one(pp)
        if (~pos).any():
            try:
                out[~pos] = self.moment_at_one
            except DivergentMoment:
                out[~pos] = math.inf
        return _scalar_or_array(out, scalar)

    # kinks -----------------------------------------------------------------
    def psi_breakpoints(self, lo: float, hi: float) -> np.ndarray:
        """Points in (lo, hi) where psi (equivalently exp_phi) is not smooth."""
        pts = []
        if math.isfinite(self.m) and lo < self.m < hi:
            pts.append(self.m)
        if math.isfinite(self.M) and lo < self.M < hi:
            pts.append(self.M)
        u_lo = float(self.exp_phi(lo)) if lo > self.m else 0.0
        u_hi = float(self.exp_phi(hi)) if hi < self.M else math.inf
        k = self.deformer.kinks(u_lo, u_hi)
        if k.size:
            lv = np.asarray(self._kernel.ln(k), dtype=float)
            pts.extend(lv[(lv > lo) & (lv < hi)].tolist())
        return np.unique(np.array(pts, dtype=float))


# functional forms ------------------------------------------------------------


def ln_phi(calc: DeformedCalculus, u):
    return calc.ln_phi(u)


def exp_phi(calc: DeformedCalculus, y):
    return calc.exp_phi(y)


def psi(calc: DeformedCalculus, y):
    return calc.psi(y)


def chi(calc: DeformedCalculus, v):
    return calc.chi(v)


def range_bounds(calc: DeformedCalculus) -> tuple[float, float]:
    return calc.range_bounds()
