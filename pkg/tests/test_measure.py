import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phifam import DivergentIntegral, MeasureSpace, Pdf, RandomVariable, expectation, normalization_residual
from phifam.quadrature import adaptive_gl, composite_nodes


def test_gauss_legendre_is_exact_for_polynomials():
    x, w = composite_nodes(np.array([0.0, 2.0]), 8)
    # degree 15 is the highest exact degree for 8 nodes
    assert float(w @ x**15) == pytest.approx(2.0**16 / 16, rel=1e-13)


def test_adaptive_rule_handles_kinks():
    val = adaptive_gl(lambda x: np.abs(x - 0.3), 0.0, 1.0, 1e-12, (0.3,))
    assert val == pytest.approx(0.045 + 0.245, abs=1e-12)


def test_half_line_exponential_moments():
    space = MeasureSpace.lebesgue(0.0, math.inf)
    for k in range(4):
        val = space.integrate(lambda x, k=k: x**k * np.exp(-x), check=True)
        assert val == pytest.approx(math.factorial(k), rel=1e-10)


def test_slow_algebraic_tail_converges():
    space = MeasureSpace.lebesgue(0.0, math.inf)
    assert space.integrate(lambda x: (1.0 + x) ** -1.5, check=True) == pytest.approx(2.0, rel=1e-6)


def test_divergent_integral_detected():
    space = MeasureSpace.lebesgue(0.0, math.inf)
    with pytest.raises(DivergentIntegral):
        space.integrate(lambda x: 1.0 / (1.0 + x), check=True)
    with pytest.raises(DivergentIntegral):
        space.integrate(lambda x: np.where(x > 0, 1.0 / np.maximum(x, 1e-300), 0.0) * (x < 1), (1.0,), check=True)


def test_breakpoints_make_kinked_integrands_exact():
    space = MeasureSpace.lebesgue(0.0, 3.0, panels=16)
    f = lambda x: np.maximum(1.0 - np.abs(x - 1.3), 0.0)  # noqa: E731
    assert space.integrate(f, (0.3, 1.3, 2.3)) == pytest.approx(1.0, abs=1e-14)


def test_discrete_space_sums_with_weights():
    space = MeasureSpace.discrete([0.0, 1.0, 2.0], [1.0, 2.0, 0.5])
    assert space.integrate(lambda x: x + 1.0) == pytest.approx(1.0 + 4.0 + 1.5)
    assert space.total_mass == 3.5


def test_measure_validation():
    with pytest.raises(ValueError):
        MeasureSpace.discrete([0.0, 0.0])
    with pytest.raises(ValueError):
        MeasureSpace.discrete([0.0], [0.0])
    with pytest.raises(ValueError):
        MeasureSpace.lebesgue(1.0, 0.0)
    with pytest.raises(ValueError):
        MeasureSpace.from_spec({"kind": "counting"})


def test_measure_spec_round_trip():
    for space in (MeasureSpace.lebesgue(0.0, "inf"), MeasureSpace.lebesgue(-1.0, 2.0), MeasureSpace.discrete([1, 2], [0.5, 0.5])):
        assert MeasureSpace.from_spec(space.to_spec()) == space


def test_random_variable_algebra():
    x = np.array([0.0, 1.0, 2.0])
    a = RandomVariable.monomial(2.0, 1.0)
    b = RandomVariable.constant(3.0)
    np.testing.assert_allclose((a + b)(x), [3, 5, 7])
    np.testing.assert_allclose((a - b)(x), [-3, -1, 1])
    np.testing.assert_allclose((a * b)(x), [0, 6, 12])
    np.testing.assert_allclose((0.5 * a)(x), [0, 1, 2])
    t = RandomVariable.table([2.0, 0.0], [7.0, 5.0])
    np.testing.assert_allclose(t(x), [5.0, 0.0, 7.0])
    assert RandomVariable.from_spec(a.spec)(x).tolist() == a(x).tolist()


def test_pdf_helpers():
    space = MeasureSpace.discrete([0.0, 1.0, 2.0])
    p = Pdf.tabulated(space, [0.2, 0.3, 0.5])
    assert normalization_residual(p) == pytest.approx(0.0, abs=1e-15)
    assert expectation(p, RandomVariable.monomial()) == pytest.approx(1.3)
    u = Pdf.uniform(0.0, 2.0)
    assert normalization_residual(u) == pytest.approx(0.0, abs=1e-13)
    assert expectation(u, lambda x: x**2) == pytest.approx(4.0 / 3.0, rel=1e-12)
    with pytest.raises(ValueError):
        Pdf.tabulated(space, [1.0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0), st.floats(0.0, 1.0))
def test_integration_is_linear(r1, r2, lam):
    space = MeasureSpace.lebesgue(0.0, math.inf)
    f = lambda x: np.exp(-r1 * x)  # noqa: E731
    g = lambda x: x * np.exp(-r2 * x)  # noqa: E731
    combined = space.integrate(lambda x: lam * f(x) + (1 - lam) * g(x))
    assert combined == pytest.approx(lam / r1 + (1 - lam) / r2**2, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8), st.floats(0.0, 1.0))
def test_mixture_stays_normalized(vals, lam):
    space = MeasureSpace.discrete(list(range(len(vals))))
    p = Pdf.tabulated(space, np.array(vals) / sum(vals))
    q = Pdf.tabulated(space, np.full(len(vals), 1.0 / len(vals)))
    assert normalization_residual(p.mixture(q, lam)) == pytest.approx(0.0, abs=1e-14)
