"""Deformed Bregman divergence, information content and the maximum-entropy property.

With Lambda(u) = int_0^u ln_phi,

    D(p || p') = int [Lambda(p) - Lambda(p') - (p - p') ln_phi(p')] dmu
    I(p)       = -int_0^1 u/phi(u) du - int Lambda(p) dmu

The divergence is evaluated through the antiderivative of ln_phi anchored at
u = 1, which stays finite even when int_0^1 u/phi(u) du diverges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _numdiff
from .errors import DivergentMoment, SpaceMismatch
from .family import PhiFamily, as_theta
from .kernel import DeformedCalculus
from .measure import Pdf

# mass below this on mismatched nodes is floating-point underflow, not a support difference
UNDERFLOW_MASS = 1e-100


@dataclass(frozen=True)
class DivergenceValue:
    value: float
    I_p: float | None = None
    I_p_prime: float | None = None
    linear_term: float | None = None

    @property
    def decomposition(self) -> dict | None:
        if self.I_p is None:
            return None
        return {"I_p": self.I_p, "I_p_prime": self.I_p_prime, "linear_term": self.linear_term}

    def decomposition_gap(self) -> float:
        """value - (I(p') - I(p) - linear_term); zero up to quadrature error."""
        if self.I_p is None:
            return math.nan
        return self.value - (self.I_p_prime - self.I_p - self.linear_term)


def _ln_floor(calc: DeformedCalculus, u: np.ndarray) -> np.ndarray:
    """ln_phi with its limit m at u = 0."""
    return calc._ln0(u)


def divergence_density(calc: DeformedCalculus, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise int_b^a [ln_phi(u) - ln_phi(b)] du for densities a and b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros(np.broadcast(a, b).shape)
    a, b = np.broadcast_arrays(a, b)
    both = (a > 0) & (b > 0)
    if both.any():
        aa, bb = a[both], b[both]
        out[both] = calc.ln_phi_antiderivative(aa) - calc.ln_phi_antiderivative(bb) - (aa - bb) * calc.ln_phi(bb)
    only_a = (a > 0) & (b <= 0)
    if only_a.any():
        m = calc.m
        if math.isinf(m):
            out[only_a] = math.inf
        else:
            aa = a[only_a]
            out[only_a] = calc.ln_phi_antiderivative(aa) - calc.moment_at_one - aa * m
    only_b = (a <= 0) & (b > 0)
    if only_b.any():
        bb = b[only_b]
        floor = calc.ln_phi_antiderivative(np.zeros(1))[0]
        out[only_b] = floor - calc.ln_phi_antiderivative(bb) + bb * calc.ln_phi(bb)
    # rounding can leave tiny negatives where a and b nearly agree
    return np.maximum(out, 0.0)


def _common_nodes(p: Pdf, p2: Pdf):
    if p.space != p2.space:
        raise SpaceMismatch("densities live on different measure spaces", quantity="space")
    return p.space.nodes((*p.breakpoints, *p2.breakpoints))


def _drop_underflow(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Zero out tail nodes where one density has underflowed and the other carries no mass.

    Far in an unbounded tail exp(-2x) reaches 0.0 long before exp(-x) does;
    without this the divergence of two exponentials would read +inf.
    """
    lone = ((a > 0) & (b <= 0)) | ((b > 0) & (a <= 0))
    if lone.any() and float(w[lone] @ (a[lone] + b[lone])) <= UNDERFLOW_MASS:
        a = np.where(lone, 0.0, a)
        b = np.where(lone, 0.0, b)
    return a, b


def divergence(calc: DeformedCalculus, p: Pdf, p2: Pdf, decompose: bool = True) -> DivergenceValue:
    """D(p || p2) with, when every part is finite, the entropy decomposition."""
    x, w = _common_nodes(p, p2)
    a, b = p(x), p2(x)
    a, b = _drop_underflow(a, b, w)
    with np.errstate(invalid="ignore"):
        value = float(w @ divergence_density(calc, a, b))
    if not decompose:
        return DivergenceValue(value)
    try:
        I_a = _information_on_nodes(calc, a, w)
        I_b = _information_on_nodes(calc, b, w)
    except DivergentMoment:
        return DivergenceValue(value)
    with np.errstate(invalid="ignore"):
        lin = float(w @ np.where(a - b == 0, 0.0, (a - b) * _ln_floor(calc, b)))
    if not all(math.isfinite(v) for v in (value, I_a, I_b, lin)):
        return DivergenceValue(value)
    return DivergenceValue(value, I_a, I_b, lin)


def _information_on_nodes(calc: DeformedCalculus, p: np.ndarray, w: np.ndarray) -> float:
    return -calc.moment_at_one - float(w @ calc.ln_phi_integral(p))


def information_content(calc: DeformedCalculus, p: Pdf, route: str = "integral", check: bool = True) -> float:
    """I_phi(p).

    ``route="integral"`` (default) uses -int_0^1 u/phi - int int_0^p ln_phi;
    ``route="direct"`` integrates p ln_chi(1/p) with 0 ln_chi(inf) read as 0.
    """
    K1 = calc.moment_at_one  # raises DivergentMoment when I_phi is undefined
    if route == "integral":
        return -K1 - p.space.integrate(lambda x: calc.ln_phi_integral(p(x)), p.breakpoints, check=check)
    if route == "direct":

        def integrand(x):
            v = p(x)
            out = np.zeros_like(v)
            pos = v > 0
            if pos.any():
                out[pos] = v[pos] * calc.ln_chi(1.0 / v[pos])
            return out

        return p.space.integrate(integrand, p.breakpoints, check=check)
    raise ValueError(f"unknown route {route!r}")


def _gap_to_next_kink(calc: DeformedCalculus, v: float) -> float:
    ahead = calc.deformer.kinks(v * (1 + 1e-12), 2.0 * v + 1.0)
    return float(ahead[0] - v) if ahead.size else v


def entropy_derivative_residual(calc: DeformedCalculus, v: float) -> float:
    """|d/dv [v ln_chi(1/v)] + ln_phi(v) + int_0^1 u/phi(u) du| with a five-point derivative.

    Next to a kink of phi the derivative is taken from the right, which is
    where the identity holds as a one-sided statement.
    """
    if v <= 0:
        raise ValueError("v must be positive")
    K1 = calc.moment_at_one
    h = 1e-3 * v

    def f(t):
        return t * float(calc.ln_chi(1.0 / t))

    if calc.deformer.kinks(v - 2 * h, v + 2 * h).size or calc.deformer.kinks(v - 4 * h, v).size:
        # a kink of phi nearby: use a one-sided stencil on the smooth side to the right
        h = min(h, 0.2 * _gap_to_next_kink(calc, v))
        deriv = (-25 * f(v) + 48 * f(v + h) - 36 * f(v + 2 * h) + 16 * f(v + 3 * h) - 3 * f(v + 4 * h)) / (12 * h)
    else:
        deriv = (f(v - 2 * h) - 8 * f(v - h) + 8 * f(v + h) - f(v + 2 * h)) / (12 * h)
    return abs(deriv + float(calc.ln_phi(v)) + K1)


lemma1_residual = entropy_derivative_residual  # name used by the operation catalogue


# ---------------------------------------------------------------------------
# Maximum entropy
# ---------------------------------------------------------------------------


@dataclass
class MaxentReport:
    trials: int
    seed: int
    violations: int = 0
    unconstrained_violations: int = 0
    max_excess: float = -math.inf
    min_gap: float = math.inf
    max_constraint_error: float = 0.0
    entropy: float = math.nan
    scale: float = math.nan
    details: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.unconstrained_violations == 0

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "seed": self.seed,
            "violations": self.violations,
            "unconstrained_violations": self.unconstrained_violations,
            "max_excess": self.max_excess,
            "min_gap": self.min_gap,
            "max_constraint_error": self.max_constraint_error,
        }


def _coordinate(space, x: np.ndarray) -> np.ndarray:
    """Map sample points to [0, 1] for building smooth random perturbations."""
    if space.is_discrete:
        return np.linspace(0.0, 1.0, x.size)
    if math.isinf(space.b):
        d = x - space.a
        return d / (1.0 + d)
    return (x - space.a) / (space.b - space.a)


def _random_shape(rng: np.random.Generator, space, x: np.ndarray, degree: int = 6) -> np.ndarray:
    if space.is_discrete:
        return rng.uniform(-1.0, 1.0, x.size)
    t = _coordinate(space, x)
    coef = rng.normal(size=degree + 1) / (1.0 + np.arange(degree + 1))
    phase = rng.uniform(0.0, 2.0 * math.pi, degree + 1)
    return sum(c * np.cos(math.pi * j * t + ph) for j, (c, ph) in enumerate(zip(coef, phase)))


def maxent_check(fam: PhiFamily, theta, trials: int = 50, seed: int = 0, eps=(1e-2, 1e-1), tol: float = 1e-7) -> MaxentReport:
    """Compare I_phi(p_theta) with randomly perturbed densities.

    Constrained trials keep both the normalization and E[theta.c] fixed and
    must not exceed I_phi(p_theta).  Unconstrained trials only keep the
    normalization, half of them by mixing in a density whose support is the
    whole space, and must satisfy E[theta.c] - I_phi >= F(theta).
    """
    th = as_theta(theta, fam.n)
    pdf = fam.pdf(th)
    x, w = fam.space.nodes(pdf.breakpoints)
    p = pdf(x)
    lin = fam.linear(th, x)
    calc = fam.calc
    I0 = _information_on_nodes(calc, p, w)
    target = float(w @ (p * lin))
    F = target - I0
    report = MaxentReport(trials, seed, entropy=I0, scale=F)
    streams = np.random.SeedSequence(seed).spawn(2 * trials)
    on = p > 0

    for i in range(trials):
        rng = np.random.default_rng(streams[i])
        h = _random_shape(rng, fam.space, x)
        basis = np.stack([np.ones_like(x), lin], axis=1)
        gram = basis.T @ (basis * (w * p)[:, None])
        coef = np.linalg.lstsq(gram, basis.T @ (w * p * h), rcond=1e-14)[0]
        h = h - basis @ coef
        h = h / max(np.abs(h[on]).max(), 1e-300)
        pt = p * (1.0 + eps[i % len(eps)] * h)
        err = max(abs(float(w @ pt) - 1.0), abs(float(w @ (pt * lin)) - target) / max(1.0, abs(target)))
        report.max_constraint_error = max(report.max_constraint_error, err)
        excess = _information_on_nodes(calc, pt, w) - I0
        report.max_excess = max(report.max_excess, excess)
        if excess > tol or err > 1e-8:
            report.violations += 1

    for i in range(trials):
        rng = np.random.default_rng(streams[trials + i])
        e = eps[i % len(eps)]
        if i % 2 == 0:
            h = _random_shape(rng, fam.space, x)
            h = h - float(w @ (p * h))
            h = h / max(np.abs(h[on]).max(), 1e-300)
            pt = p * (1.0 + e * h)
        else:
            r = 1.0 + 0.5 * np.tanh(_random_shape(rng, fam.space, x))
            if not fam.space.is_discrete and math.isinf(fam.space.b):
                r = r * np.exp(-(x - fam.space.a))
            r = r / float(w @ r)
            pt = (1.0 - e) * p + e * r
        gap = float(w @ (pt * lin)) - _information_on_nodes(calc, pt, w) - F
        report.min_gap = min(report.min_gap, gap)
        if gap < -tol:
            report.unconstrained_violations += 1
    return report


# ---------------------------------------------------------------------------
# Metric from the divergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceMetric:
    hess_theta: np.ndarray
    cross: np.ndarray
    hess_eta: np.ndarray
    target: np.ndarray
    first_theta: np.ndarray
    first_eta: np.ndarray

    def relative_errors(self) -> dict:
        scale = max(float(np.abs(self.target).max()), 1e-300)
        return {
            name: float(np.abs(getattr(self, name) - self.target).max() / scale)
            for name in ("hess_theta", "cross", "hess_eta")
        }

    def passed(self, rel: float = 1e-3, first: float = 1e-5) -> bool:
        return (
            max(self.relative_errors().values()) <= rel
            and float(np.abs(self.first_theta).max()) <= first
            and float(np.abs(self.first_eta).max()) <= first
        )


def metric_from_divergence(fam: PhiFamily, theta) -> DivergenceMetric:
    """Second derivatives of D(p_theta || p_eta) at eta = theta, set against g / Z."""
    from .geometry import g_matrix

    th = as_theta(theta, fam.n)
    n = fam.n

    def D(z: np.ndarray) -> float:
        return divergence(fam.calc, fam.pdf(z[:n]), fam.pdf(z[n:]), decompose=False).value

    z0 = np.concatenate([th, th])
    H = np.empty((2 * n, 2 * n))
    for i in range(2 * n):
        for j in range(i, 2 * n):
            H[i, j] = H[j, i] = _numdiff.second_partial(D, z0, i, j)
    first = np.array([float(_numdiff.partial(D, z0, i)) for i in range(2 * n)])
    target = g_matrix(fam.pair(), th).entries / fam.zet(th)
    return DivergenceMetric(H[:n, :n], -H[:n, n:], H[n:, n:], target, first[:n], first[n:])
