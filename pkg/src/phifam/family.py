"""Deformed exponential families and their escort families.

A family is fixed by a deformed calculus, a measure space and statistics
c_1..c_n.  For a parameter vector theta the density is

    p_theta(x) = exp_phi(G(theta) - theta . c(x))

where G(theta) is found numerically so that p_theta integrates to one.  The
canonical escort is P_theta = phi(p_theta) / Z(theta) with
Z(theta) = int psi(G(theta) - theta . c) dmu.

General (p_theta, P_theta) pairings that do not come from a family are
represented by :class:`EscortPair`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import _numdiff
from .errors import DivergentIntegral, OutsideDomain
from .kernel import DeformedCalculus
from .measure import MeasureSpace, Pdf, RandomVariable

_SCAN_POINTS = 4096
_BRACKET_LIMIT = 1e6


def as_theta(theta, n: int | None = None) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta, dtype=float)).ravel()
    if n is not None and th.size != n:
        raise ValueError(f"expected a parameter vector of length {n}, got {th.size}")
    if not np.all(np.isfinite(th)):
        raise ValueError("parameters must be finite")
    return th


@dataclass(frozen=True)
class Estimator:
    """A vector of random variables c_k used to estimate the parameters."""

    components: tuple[RandomVariable, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def n(self) -> int:
        return len(self.components)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([c(x) for c in self.components])

    @classmethod
    def from_spec(cls, specs: Sequence[dict]) -> "Estimator":
        return cls(tuple(RandomVariable.from_spec(s) for s in specs))


# ---------------------------------------------------------------------------
# Escort pairs
# ---------------------------------------------------------------------------


def _no_breakpoints(theta):
    return ()


@dataclass(frozen=True, eq=False)
class EscortPair:
    """A parametrized density ``base(theta, x)`` with a companion ``escort(theta, x)``.

    ``scale`` and ``zet`` are the functions G and Z when they are known
    (always for pairs built from a :class:`PhiFamily`).
    """

    space: MeasureSpace
    base: Callable[[np.ndarray, np.ndarray], np.ndarray]
    escort: Callable[[np.ndarray, np.ndarray], np.ndarray]
    breakpoints: Callable[[np.ndarray], Sequence[float]] = _no_breakpoints
    statistics: tuple[RandomVariable, ...] = ()
    scale: Callable[[np.ndarray], float] | None = None
    zet: Callable[[np.ndarray], float] | None = None
    n: int = 1
    label: str = ""

    def nodes(self, theta) -> tuple[np.ndarray, np.ndarray]:
        return self.space.nodes(tuple(self.breakpoints(as_theta(theta, self.n))))

    def base_pdf(self, theta) -> Pdf:
        th = as_theta(theta, self.n)
        return Pdf(self.space, lambda x: self.base(th, x), tuple(self.breakpoints(th)))

    def escort_pdf(self, theta) -> Pdf:
        th = as_theta(theta, self.n)
        return Pdf(self.space, lambda x: self.escort(th, x), tuple(self.breakpoints(th)))

    def base_derivative(self, theta, k: int, x: np.ndarray) -> np.ndarray:
        """d p_theta(x) / d theta^k by central differences at fixed x."""
        th = as_theta(theta, self.n)
        return _numdiff.partial(lambda t: self.base(t, x), th, k)

    def estimator(self) -> Estimator:
        if not self.statistics:
            raise ValueError("this pair carries no statistics")
        return Estimator(self.statistics)


# ---------------------------------------------------------------------------
# Deformed exponential family
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PhiFamily:
    """p_theta = exp_phi(G(theta) - theta . c) over ``space``."""

    calc: DeformedCalculus
    space: MeasureSpace
    statistics: tuple[RandomVariable, ...]
    label: str = ""
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "statistics", tuple(self.statistics))
        if not self.statistics:
            raise ValueError("a family needs at least one statistic")

    @classmethod
    def from_spec(cls, spec: dict, panels: int | None = None) -> "PhiFamily":
        return cls(
            DeformedCalculus.from_spec(spec["deformer"]),
            MeasureSpace.from_spec(spec["measure"], panels),
            tuple(RandomVariable.from_spec(s) for s in spec["statistics"]),
        )

    @property
    def n(self) -> int:
        return len(self.statistics)

    @property
    def estimator(self) -> Estimator:
        return Estimator(self.statistics)

    def linear(self, theta, x) -> np.ndarray:
        """theta^k c_k(x)."""
        th = as_theta(theta, self.n)
        x = np.asarray(x, dtype=float)
        return sum(t * c(x) for t, c in zip(th, self.statistics))

    # support cutoffs and kinks ---------------------------------------------
    @cached_property
    def _scan(self) -> tuple[np.ndarray, np.ndarray]:
        """Scan grid and the statistics evaluated on it (read-only after first use)."""
        sp = self.space
        if sp.is_discrete:
            x = np.asarray(sp.points, dtype=float)
        elif math.isinf(sp.b):
            t = np.linspace(0.0, 1.0, _SCAN_POINTS + 1)[:-1]
            x = sp.a + t / (1.0 - t)
        else:
            x = np.linspace(sp.a, sp.b, _SCAN_POINTS + 1)
        cvals = np.stack([c(x) for c in self.statistics])
        x.setflags(write=False)
        cvals.setflags(write=False)
        return x, cvals

    def breakpoints(self, theta, G: float) -> tuple[float, ...]:
        """Points where G - theta.c(x) crosses m, M or a kink level of psi."""
        if self.space.is_discrete:
            return ()
        th = as_theta(theta, self.n)
        xs, cvals = self._scan
        s = G - th @ cvals
        finite = np.isfinite(s)
        if not finite.any():
            return ()
        lo, hi = float(s[finite].min()), float(s[finite].max())
        levels = [lv for lv in (self.calc.m, self.calc.M) if math.isfinite(lv) and lo <= lv <= hi]
        levels.extend(self.calc.psi_breakpoints(lo, hi).tolist())
        if not levels:
            return ()

        def arg(x: float) -> float:
            return float(G - self.linear(th, np.array([x]))[0])

        out = []
        for level in sorted(set(levels)):
            d = s - level
            idx = np.nonzero(finite[:-1] & finite[1:] & (np.sign(d[:-1]) * np.sign(d[1:]) < 0))[0]
            for i in idx:
                a, b = float(xs[i]), float(xs[i + 1])
                out.append(brentq(lambda x: arg(x) - level, a, b, xtol=1e-15, rtol=8.9e-16))
            out.extend(float(xs[i]) for i in np.nonzero(d == 0.0)[0])
        return tuple(sorted(set(out)))

    # normalization -----------------------------------------------------------
    def _arguments(self, theta: np.ndarray, G: float, panels: int | None = None):
        bps = self.breakpoints(theta, G)
        x, w = self.space.nodes(bps, panels)
        return x, w, G - self.linear(theta, x), bps

    def normalization(self, theta, G: float) -> float:
        """int exp_phi(G - theta.c) dmu on the fixed quadrature grid (inf if unbounded)."""
        th = as_theta(theta, self.n)
        _, w, y, _ = self._arguments(th, float(G))
        vals = np.asarray(self.calc.exp_phi(y), dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            total = float(w @ vals)
        return total if math.isfinite(total) else math.inf

    def _initial_guess(self) -> float:
        mass = self.space.total_mass
        if math.isfinite(mass):
            return float(self.calc.ln_phi(1.0 / mass))
        return 0.0

    def solve_G(self, theta) -> float:
        """The normalizing G(theta); raises OutsideDomain when none exists."""
        th = as_theta(theta, self.n)
        key = tuple(th.tolist())
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            if isinstance(hit, Exception):
                raise hit
            return hit
        try:
            G = self._solve(th)
        except OutsideDomain as err:
            with self._lock:
                self._cache[key] = err
            raise
        with self._lock:
            self._cache[key] = G
        return G

    def _solve(self, th: np.ndarray) -> float:
        def N(G: float) -> float:
            return self.normalization(th, G)

        def outside(msg: str) -> OutsideDomain:
            return OutsideDomain(f"theta={th.tolist()}: {msg}", quantity="G", tolerance=1e-10)

        g0 = self._initial_guess()
        n0 = N(g0)
        if n0 == 1.0:
            return g0
        step = 1.0
        if n0 < 1.0:
            lo, hi = g0, g0 + step
            while True:
                nh = N(hi)
                if nh >= 1.0:
                    break
                lo = hi
                step *= 2.0
                hi = lo + step
                if hi > _BRACKET_LIMIT:
                    raise outside("normalization stays below 1")
            if math.isinf(nh):
                # the integral jumps to +inf somewhere in (lo, hi): look for a finite value >= 1
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    nm = N(mid)
                    if math.isinf(nm):
                        hi = mid
                    elif nm >= 1.0:
                        hi = mid
                        break
                    else:
                        lo = mid
                    if hi - lo <= 1e-13 * max(1.0, abs(hi)):
                        raise outside("normalization jumps over 1 through +inf")
                else:
                    raise outside("normalization jumps over 1 through +inf")
        else:
            hi, lo = g0, g0 - step
            while N(lo) > 1.0:
                hi = lo
                step *= 2.0
                lo = hi - step
                if lo < -_BRACKET_LIMIT:
                    raise outside("normalization stays above 1")
            if math.isinf(N(hi)):
                for _ in range(200):
                    mid = 0.5 * (lo + hi)
                    nm = N(mid)
                    if math.isinf(nm):
                        hi = mid
                    elif nm >= 1.0:
                        hi = mid
                        break
                    else:
                        lo = mid
                    if hi - lo <= 1e-13 * max(1.0, abs(hi)):
                        raise outside("normalization jumps over 1 through +inf")
        G = brentq(lambda g: N(g) - 1.0, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=300)
        # confirm on refined panels that the integral is genuinely finite and normalized
        bps = self.breakpoints(th, G)
        try:
            total = self.space.integrate(
                lambda x: self.calc.exp_phi(G - self.linear(th, x)), bps, check=True
            )
        except DivergentIntegral as err:
            raise outside(f"normalization integral diverges ({err})") from None
        if abs(total - 1.0) > 1e-8:
            raise outside(f"normalization is not stable under refinement (|N-1|={abs(total - 1.0):.3g})")
        return float(G)

    def in_domain(self, theta) -> bool:
        try:
            self.solve_G(theta)
        except OutsideDomain:
            return False
        return True

    # densities -----------------------------------------------------------------
    def pdf_at(self, theta, x) -> np.ndarray:
        th = as_theta(theta, self.n)
        G = self.solve_G(th)
        return self.calc.exp_phi(G - self.linear(th, x))

    def pdf(self, theta) -> Pdf:
        th = as_theta(theta, self.n)
        G = self.solve_G(th)
        return Pdf(self.space, lambda x: self.calc.exp_phi(G - self.linear(th, x)), self.breakpoints(th, G))

    def support_breakpoints(self, theta) -> tuple[float, ...]:
        th = as_theta(theta, self.n)
        return self.breakpoints(th, self.solve_G(th))

    def zet(self, theta) -> float:
        """Z(theta) = int psi(G - theta.c) dmu."""
        th = as_theta(theta, self.n)
        key = ("Z", *th.tolist())
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        G = self.solve_G(th)
        Z = self.space.integrate(lambda x: self.calc.psi(G - self.linear(th, x)), self.breakpoints(th, G), check=True)
        if not Z > 0:
            raise DivergentIntegral("escort normalization is not positive", quantity="Z")
        with self._lock:
            self._cache[key] = Z
        return Z

    def escort_at(self, theta, x) -> np.ndarray:
        th = as_theta(theta, self.n)
        G = self.solve_G(th)
        return self.calc.psi(G - self.linear(th, x)) / self.zet(th)

    def escort(self, theta) -> Pdf:
        th = as_theta(theta, self.n)
        G = self.solve_G(th)
        Z = self.zet(th)
        return Pdf(self.space, lambda x: self.calc.psi(G - self.linear(th, x)) / Z, self.breakpoints(th, G))

    def pair(self) -> EscortPair:
        """The canonical (p_theta, P_theta) pair with its scale function G and Z."""
        return EscortPair(
            space=self.space,
            base=lambda th, x: self.pdf_at(th, x),
            escort=lambda th, x: self.escort_at(th, x),
            breakpoints=self.support_breakpoints,
            statistics=self.statistics,
            scale=self.solve_G,
            zet=self.zet,
            n=self.n,
            label=self.label or "canonical",
        )

    # moments ---------------------------------------------------------------------
    def mean(self, theta) -> np.ndarray:
        """eta_k = E_theta c_k."""
        th = as_theta(theta, self.n)
        G = self.solve_G(th)
        x, w, y, _ = self._arguments(th, G)
        p = self.calc.exp_phi(y)
        return np.array([float(w @ (p * c(x))) for c in self.statistics])

    def escort_moments(self, theta) -> tuple[np.ndarray, np.ndarray]:
        """(F_theta c_k, F_theta c_k c_l) under the escort."""
        th = as_theta(theta, self.n)
        G = self.solve_G(th)
        x, w, y, _ = self._arguments(th, G)
        P = self.calc.psi(y) / self.zet(th)
        C = np.stack([c(x) for c in self.statistics])
        first = C @ (w * P)
        second = (C * (w * P)) @ C.T
        return first, second


# ---------------------------------------------------------------------------
# Checks on pairs and estimators
# ---------------------------------------------------------------------------


def solve_G(fam: PhiFamily, theta) -> float:
    return fam.solve_G(theta)


def pdf_at(fam: PhiFamily, theta, x):
    return fam.pdf_at(theta, x)


def escort_at(fam: PhiFamily, theta, x):
    return fam.escort_at(theta, x)


def zet(fam: PhiFamily, theta) -> float:
    return fam.zet(theta)


def escort_condition_residual(pair: EscortPair, theta, k: int) -> float:
    """sup_x |dp/dtheta^k - Z P (dG/dtheta^k - c_k)| over the quadrature nodes.

    When the pair does not carry G and Z, the two unknown numbers Z and
    Z dG/dtheta^k are fitted by least squares, so the residual measures how
    far the pair is from satisfying the condition for any choice of them.
    """
    th = as_theta(theta, pair.n)
    x, _ = pair.nodes(th)
    dp = pair.base_derivative(th, k, x)
    P = np.asarray(pair.escort(th, x), dtype=float)
    c_k = pair.statistics[k](x)
    if pair.scale is not None and pair.zet is not None:
        Z = pair.zet(th)
        dG = float(_numdiff.partial(lambda t: pair.scale(t), th, k))
        model = Z * P * (dG - c_k)
    else:
        design = np.stack([P, -P * c_k], axis=1)
        coef, *_ = np.linalg.lstsq(design, dp, rcond=None)
        model = design @ coef
    return float(np.max(np.abs(dp - model)))


def mean_statistics(pair: EscortPair, theta) -> np.ndarray:
    """E_theta c_k under the base density."""
    th = as_theta(theta, pair.n)
    x, w = pair.nodes(th)
    p = np.asarray(pair.base(th, x), dtype=float)
    return np.array([float(w @ (p * c(x))) for c in pair.statistics])


def curl_residual(pair: EscortPair, theta) -> float:
    """max |d E c_k / d theta^l - d E c_l / d theta^k|; zero when E c is a gradient."""
    th = as_theta(theta, pair.n)
    J = _numdiff.jacobian(lambda t: mean_statistics(pair, t), th)
    return float(np.max(np.abs(J - J.T))) if J.size else 0.0


def alpha_from_q(q: float) -> float:
    """The alpha label of the power-deformer family with exponent q."""
    return 2.0 * q - 1.0


def alpha_family_density(alpha: float, argument) -> np.ndarray:
    """Closed-form alpha-family density at G - theta.c written in terms of alpha."""
    y = np.asarray(argument, dtype=float)
    if alpha == 1.0:
        return np.exp(y)
    base = np.maximum(1.0 + 0.5 * (1.0 - alpha) * y, 0.0)
    with np.errstate(divide="ignore"):
        return base ** (2.0 / (1.0 - alpha))
