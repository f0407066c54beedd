"""The worked examples as executable checks.

Each fixture returns a list of :class:`Check` rows comparing a computed value
with its reference value at a stated tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .entropy import divergence, information_content
from .errors import DivergentIntegral
from .family import EscortPair, PhiFamily, alpha_family_density, alpha_from_q, escort_condition_residual
from .geometry import classical_crb_sides, crb_sides, fisher_matrix, g_matrix
from .kernel import DeformedCalculus, Deformer
from .measure import MeasureSpace, Pdf, RandomVariable, normalization_residual

FIVE_E_MINUS_13 = 5.0 * math.e - 13.0


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    expected: float
    tol: float
    relative: bool = False

    @property
    def error(self) -> float:
        if math.isinf(self.expected) or math.isinf(self.value):
            return 0.0 if self.value == self.expected else math.inf
        err = abs(self.value - self.expected)
        return err / max(abs(self.expected), 1e-300) if self.relative else err

    @property
    def passed(self) -> bool:
        return self.error <= self.tol

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tol,
            "relative": self.relative,
            "passed": self.passed,
        }


def half_line(panels: int | None = None) -> MeasureSpace:
    return MeasureSpace.lebesgue(0.0, math.inf, panels)


# ---------------------------------------------------------------------------
# Families and pairs used by the examples
# ---------------------------------------------------------------------------


def triangular_exponential_pair(panels: int | None = None) -> EscortPair:
    """Triangular base (2/t)[1 - x/t]_+ with exponential escort (1/t) e^{-x/t}, estimator 3x."""

    def base(th, x):
        t = th[0]
        return (2.0 / t) * np.maximum(1.0 - np.asarray(x, dtype=float) / t, 0.0)

    def escort(th, x):
        t = th[0]
        return np.exp(-np.asarray(x, dtype=float) / t) / t

    return EscortPair(
        half_line(panels),
        base,
        escort,
        breakpoints=lambda th: (float(th[0]),),
        statistics=(RandomVariable.monomial(3.0, 1.0),),
        label="triangular/exponential",
    )


def truncated_uniform_pair(panels: int | None = None) -> EscortPair:
    """Triangular base paired with a uniform escort on [0, t/2]; violates the regularity condition."""
    tri = triangular_exponential_pair(panels)

    def escort(th, x):
        t = th[0]
        x = np.asarray(x, dtype=float)
        return np.where(x <= 0.5 * t, 2.0 / t, 0.0)

    return EscortPair(
        tri.space,
        tri.base,
        escort,
        breakpoints=lambda th: (0.5 * float(th[0]), float(th[0])),
        statistics=tri.statistics,
        label="triangular/truncated-uniform",
    )


def constant_family(panels: int | None = None) -> PhiFamily:
    """phi = 1 with c(x) = 2x: triangular densities in the parameter Theta = 1/t^2."""
    return PhiFamily(DeformedCalculus(Deformer.constant()), half_line(panels), (RandomVariable.monomial(2.0, 1.0),), "constant")


def power_family(q: float, panels: int | None = None) -> PhiFamily:
    return PhiFamily(DeformedCalculus(Deformer.power(q)), half_line(panels), (RandomVariable.monomial(),), f"power q={q:g}")


def identity_family(panels: int | None = None) -> PhiFamily:
    return power_family(1.0, panels)


PAIRS: dict[str, Callable[..., EscortPair]] = {
    "example1": triangular_exponential_pair,
    "mismatched": truncated_uniform_pair,
}


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


def example1(panels: int | None = None) -> list[Check]:
    pair = triangular_exponential_pair(panels)
    est = pair.estimator()
    rows = []
    g1 = g_matrix(pair, 1.0).entries[0, 0]
    rows.append(Check("g(1)*1^2/4 = 5e-13", g1 / 4.0, FIVE_E_MINUS_13, 1e-4))
    for t in (0.5, 1.0, 2.0):
        lhs, rhs = crb_sides(pair, est, t, [1.0], [1.0])
        rows.append(Check(f"bound lhs at theta={t:g} (9 theta^2)", lhs, 9.0 * t * t, 1e-4, True))
        rows.append(Check(f"bound rhs at theta={t:g} (theta^2/(4(5e-13)))", rhs, t * t / (4.0 * FIVE_E_MINUS_13), 1e-4, True))
    x, w = pair.nodes(1.0)
    p, P = pair.base(np.array([1.0]), x), pair.escort(np.array([1.0]), x)
    c = 3.0 * x
    rows.append(Check("E c = theta", float(w @ (p * c)), 1.0, 1e-8))
    rows.append(Check("E c^2 = 1.5 theta^2", float(w @ (p * c * c)), 1.5, 1e-8))
    rows.append(Check("F c = 3 theta", float(w @ (P * c)), 3.0, 1e-8))
    rows.append(Check("F c^2 = 18 theta^2", float(w @ (P * c * c)), 18.0, 1e-7))
    fisher = fisher_matrix(pair, 1.0)
    rows.append(Check("Fisher information divergent (1 = yes)", float(fisher.divergent), 1.0, 0.0))
    try:
        classical_crb_sides(pair, est, 1.0, [1.0], [1.0])
        classical = 0.0
    except DivergentIntegral:
        classical = 1.0
    rows.append(Check("classical bound reports divergence (1 = yes)", classical, 1.0, 0.0))
    rows.append(Check("escort condition violated (residual > 0.1)", float(escort_condition_residual(pair, 1.0, 0) > 0.1), 1.0, 0.0))
    return rows


def example1c(panels: int | None = None) -> list[Check]:
    fam = constant_family(panels)
    pair = fam.pair()
    rows = []
    for Theta in (0.25, 1.0, 4.0):
        t = 1.0 / math.sqrt(Theta)
        first, second = fam.escort_moments(Theta)
        rows.append(Check(f"G({Theta:g}) = 2 sqrt(Theta) - 1", fam.solve_G(Theta), 2.0 * math.sqrt(Theta) - 1.0, 1e-10))
        rows.append(Check(f"g({Theta:g}) = theta^4/3", g_matrix(pair, Theta).entries[0, 0], t**4 / 3.0, 1e-5))
        rows.append(Check(f"F c at Theta={Theta:g} = theta", float(first[0]), t, 1e-5))
        rows.append(Check(f"F c^2 at Theta={Theta:g} = 4 theta^2/3", float(second[0, 0]), 4.0 * t * t / 3.0, 1e-5))
        rows.append(Check(f"eta({Theta:g}) = 2/(3 sqrt(Theta))", float(fam.mean(Theta)[0]), 2.0 / (3.0 * math.sqrt(Theta)), 1e-5))
        lhs, rhs = crb_sides(pair, pair.estimator(), Theta, [1.0], [1.0])
        rows.append(Check(f"bound is tight at Theta={Theta:g}", lhs - rhs, 0.0, 2e-5 * max(1.0, rhs)))
    rows.append(Check("p(0) at Theta=1", float(fam.pdf_at(1.0, 0.0)), 2.0, 1e-10))
    rows.append(Check("p(2) at Theta=1", float(fam.pdf_at(1.0, 2.0)), 0.0, 1e-12))
    rows.append(Check("P(0.5) at Theta=1 = 1/theta", float(fam.escort_at(1.0, 0.5)), 1.0, 1e-9))
    return rows


def example2(panels: int | None = None) -> list[Check]:
    rows = []
    for q in (0.5, 0.9, 1.1, 2.0):
        closed = DeformedCalculus(Deformer.power(q))
        numeric = DeformedCalculus(Deformer.power(q), numeric=True)
        u = np.geomspace(0.05, 20.0, 50)
        y = closed.ln_phi(u)
        rows.append(Check(f"q={q:g} numeric ln_phi vs closed form", float(np.abs(numeric.ln_phi(u) - y).max()), 0.0, 1e-8))
        rows.append(Check(f"q={q:g} numeric exp_phi vs closed form", float((np.abs(numeric.exp_phi(y) - u) / np.maximum(1.0, u)).max()), 0.0, 1e-8))
        rows.append(Check(f"q={q:g} numeric psi vs closed form", float(np.abs(numeric.psi(y) - closed.psi(y)).max()), 0.0, 1e-8))
    calc = DeformedCalculus(Deformer.power(0.5))
    rows.append(Check("ln_q(4), q=0.5", float(calc.ln_phi(4.0)), 2.0, 1e-12))
    rows.append(Check("exp_q(2), q=0.5", float(calc.exp_phi(2.0)), 4.0, 1e-12))
    rows.append(Check("psi(2), q=0.5", float(calc.psi(2.0)), 2.0, 1e-12))
    rows.append(Check("m for q=0.5", calc.m, -2.0, 1e-12))
    fam = power_family(0.5, panels)
    theta = 1.0
    G = fam.solve_G(theta)
    rows.append(Check("G(1) = 12^(1/3) - 2", G, 12.0 ** (1.0 / 3.0) - 2.0, 1e-9))
    x = np.linspace(0.0, 4.0, 41)
    closed_p = np.maximum(1.0 + 0.5 * (G - theta * x), 0.0) ** 2.0
    rows.append(Check("p_theta matches [1+(1-q)(G-theta c)]_+^(1/(1-q))", float(np.abs(fam.pdf_at(theta, x) - closed_p).max()), 0.0, 1e-12))
    alpha = alpha_from_q(0.5)
    rows.append(Check("alpha-family form with alpha = 2q-1", float(np.abs(alpha_family_density(alpha, G - theta * x) - closed_p).max()), 0.0, 1e-9))
    rows.append(Check("escort normalization residual", normalization_residual(fam.escort(theta)), 0.0, 1e-7))
    return rows


def example3(panels: int | None = None) -> list[Check]:
    calc = DeformedCalculus(Deformer.ceiling())
    rows = [
        Check("ln_phi(2.5) = 1/2 + 1/6", float(calc.ln_phi(2.5)), 2.0 / 3.0, 1e-9),
        Check("m = -1", calc.m, -1.0, 1e-12),
        Check("exp_phi(-1) = 0", float(calc.exp_phi(-1.0)), 0.0, 0.0),
        Check("exp_phi(-3) = 0", float(calc.exp_phi(-3.0)), 0.0, 0.0),
        Check("psi(-1) = 0", float(calc.psi(-1.0)), 0.0, 0.0),
    ]
    y = np.linspace(-0.99, 0.5, 31)
    rows.append(Check("psi(y) = phi(1+y) on (-1, 1/2]", float(np.abs(calc.psi(y) - np.ceil(1.0 + y)).max()), 0.0, 0.0))
    # beyond y = 1/2 psi follows phi(exp_phi(y)); e.g. exp_phi(1) = 11/3 so psi(1) = 4
    rows.append(Check("psi(1) = phi(exp_phi(1)) = 4", float(calc.psi(1.0)), 4.0, 0.0))
    u = np.linspace(0.1, 6.0, 60) + 0.013  # stay off the jumps at the integers
    rows.append(Check("psi(ln_phi(u)) = phi(u)", float(np.abs(calc.psi(calc.ln_phi(u)) - np.ceil(u)).max()), 0.0, 0.0))
    return rows


def example4(panels: int | None = None) -> list[Check]:
    rows = []
    space = MeasureSpace.discrete([0.0, 1.0, 2.0, 3.0])
    p = Pdf.tabulated(space, [0.1, 0.2, 0.3, 0.4])
    p2 = Pdf.tabulated(space, [0.25, 0.25, 0.25, 0.25])
    pv, p2v = np.array([0.1, 0.2, 0.3, 0.4]), np.full(4, 0.25)
    for q in (0.5, 1.5, 2.0):
        calc = DeformedCalculus(Deformer.scaled_power(q))
        u = np.geomspace(0.1, 10.0, 9)
        rows.append(Check(f"q={q:g} ln_phi = q/(q-1)(u^(q-1)-1)", float(np.abs(calc.ln_phi(u) - q / (q - 1) * (u ** (q - 1) - 1)).max()), 0.0, 1e-12))
        rows.append(Check(f"q={q:g} chi(v) = v^q", float(np.abs(calc.chi(u) - u**q).max() / (u**q).max()), 0.0, 1e-12))
        tsallis = float(np.sum(pv * (1 - pv ** (q - 1)) / (q - 1)))
        rows.append(Check(f"q={q:g} I_phi = Tsallis entropy", information_content(calc, p), tsallis, 1e-8))
        d_formula = float(np.sum(pv * (pv ** (q - 1) - p2v ** (q - 1))) / (q - 1) - np.sum((pv - p2v) * p2v ** (q - 1)))
        rows.append(Check(f"q={q:g} D_phi matches closed form", divergence(calc, p, p2).value, d_formula, 1e-8))
    return rows


FIXTURES: dict[str, Callable[..., list[Check]]] = {
    "example1": example1,
    "example1c": example1c,
    "example2": example2,
    "example3": example3,
    "example4": example4,
}


def run_fixture(name: str, panels: int | None = None) -> list[Check]:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[name](panels)
