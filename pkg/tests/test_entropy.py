import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from phifam import (
    DeformedCalculus,
    Deformer,
    MeasureSpace,
    Pdf,
    SpaceMismatch,
    divergence,
    information_content,
    entropy_derivative_residual,
    maxent_check,
    metric_from_divergence,
)
from phifam.errors import DivergentMoment

SPACE = MeasureSpace.discrete([0.0, 1.0, 2.0, 3.0, 4.0])
SHANNON = DeformedCalculus(Deformer.power(1.0))
ENTROPY_DEFORMERS = [
    Deformer.power(1.0),
    Deformer.power(0.5),
    Deformer.scaled_power(0.5),
    Deformer.scaled_power(1.5),
    Deformer.constant(),
    Deformer.ceiling(),
]

prob_vectors = st.lists(st.floats(0.01, 1.0), min_size=5, max_size=5).map(lambda v: np.array(v) / sum(v))


def pdf(v):
    return Pdf.tabulated(SPACE, v)


def test_shannon_and_kl():
    p = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
    r = np.full(5, 0.2)
    assert information_content(SHANNON, pdf(p)) == pytest.approx(-np.sum(p * np.log(p)), abs=1e-12)
    assert divergence(SHANNON, pdf(p), pdf(r)).value == pytest.approx(np.sum(p * np.log(p / r)), abs=1e-12)


def test_zero_mass_conventions():
    p = np.array([0.5, 0.5, 0.0, 0.0, 0.0])
    r = np.full(5, 0.2)
    assert information_content(SHANNON, pdf(p)) == pytest.approx(math.log(2), abs=1e-13)
    assert divergence(SHANNON, pdf(p), pdf(r)).value == pytest.approx(math.log(2.5), abs=1e-13)
    # support of p not inside support of p2 gives +inf when ln_phi is unbounded below
    assert divergence(SHANNON, pdf(r), pdf(p)).value == math.inf


def test_tsallis_entropy():
    p = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
    for q in (0.5, 1.5, 2.0):
        calc = DeformedCalculus(Deformer.scaled_power(q))
        expected = np.sum(p * (1 - p ** (q - 1))) / (q - 1)
        assert information_content(calc, pdf(p)) == pytest.approx(expected, abs=1e-12)


def test_information_routes_agree():
    p = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
    for d in ENTROPY_DEFORMERS:
        calc = DeformedCalculus(d)
        a = information_content(calc, pdf(p), route="integral")
        b = information_content(calc, pdf(p), route="direct")
        assert a == pytest.approx(b, abs=1e-8)
    with pytest.raises(ValueError):
        information_content(SHANNON, pdf(p), route="sideways")


def test_undefined_information_raises():
    calc = DeformedCalculus(Deformer.power(2.0))
    with pytest.raises(DivergentMoment):
        information_content(calc, pdf(np.full(5, 0.2)))


def test_divergence_without_information():
    # the divergence stays finite when the entropy is undefined
    calc = DeformedCalculus(Deformer.power(2.0))
    res = divergence(calc, pdf(np.array([0.1, 0.2, 0.3, 0.15, 0.25])), pdf(np.full(5, 0.2)))
    assert math.isfinite(res.value) and res.value > 0
    assert res.decomposition is None


def test_space_mismatch():
    other = Pdf.tabulated(MeasureSpace.discrete([0.0, 1.0]), [0.5, 0.5])
    with pytest.raises(SpaceMismatch):
        divergence(SHANNON, pdf(np.full(5, 0.2)), other)


def test_continuous_divergence(identity):
    # KL between exponentials: log(a/b) + b/a - 1
    a, b = 1.0, 2.5
    val = divergence(identity.calc, identity.pdf(a), identity.pdf(b)).value
    assert val == pytest.approx(math.log(a / b) + b / a - 1, abs=1e-9)


@pytest.mark.parametrize("d", ENTROPY_DEFORMERS, ids=lambda d: d.kind + str(d.q or ""))
def test_entropy_derivative_identity(d):
    calc = DeformedCalculus(d)
    for v in (0.2, 0.7, 1.0, 2.5):
        assert entropy_derivative_residual(calc, v) < 1e-7


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ENTROPY_DEFORMERS), prob_vectors, prob_vectors)
def test_divergence_nonnegative_and_decomposes(d, p, r):
    calc = DeformedCalculus(d)
    res = divergence(calc, pdf(p), pdf(r))
    assert res.value >= -1e-14
    assert abs(res.decomposition_gap()) < 1e-10
    same = divergence(calc, pdf(p), pdf(p)).value
    assert same == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ENTROPY_DEFORMERS), prob_vectors, prob_vectors, prob_vectors, st.floats(0.0, 1.0))
def test_divergence_convex_in_first_argument(d, p1, p2, r, lam):
    calc = DeformedCalculus(d)
    mix = lam * p1 + (1 - lam) * p2
    lhs = divergence(calc, pdf(mix), pdf(r), decompose=False).value
    rhs = lam * divergence(calc, pdf(p1), pdf(r), decompose=False).value + (1 - lam) * divergence(calc, pdf(p2), pdf(r), decompose=False).value
    assert lhs <= rhs + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(ENTROPY_DEFORMERS), prob_vectors, prob_vectors, st.floats(0.0, 1.0))
def test_information_is_concave(d, p1, p2, lam):
    calc = DeformedCalculus(d)
    mid = information_content(calc, pdf(lam * p1 + (1 - lam) * p2))
    ends = lam * information_content(calc, pdf(p1)) + (1 - lam) * information_content(calc, pdf(p2))
    assert mid >= ends - 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.95), prob_vectors)
def test_tsallis_matches_closed_form(q, p):
    assume(abs(q - 1) > 1e-3)
    calc = DeformedCalculus(Deformer.scaled_power(q))
    expected = np.sum(p * (1 - p ** (q - 1))) / (q - 1)
    assert information_content(calc, pdf(p)) == pytest.approx(expected, abs=1e-8)


def test_maxent(any_family):
    report = maxent_check(any_family, 1.3, trials=20, seed=7)
    assert report.passed
    assert report.max_excess <= 1e-7
    assert report.min_gap >= -1e-7
    assert report.max_constraint_error < 1e-8


def test_maxent_is_deterministic(half_power):
    a = maxent_check(half_power, 1.0, trials=5, seed=3).to_json()
    b = maxent_check(half_power, 1.0, trials=5, seed=3).to_json()
    assert a == b


def test_metric_from_divergence(any_family):
    res = metric_from_divergence(any_family, 1.4)
    assert max(res.relative_errors().values()) <= 1e-3
    assert res.passed()


def test_tsallis_tends_to_shannon():
    v = np.array([0.1, 0.2, 0.3, 0.15, 0.25])
    p = pdf(v)
    shannon = information_content(SHANNON, p)
    # first-order term in (q - 1) is -(1/2) sum p log^2 p
    slope = -0.5 * float(np.sum(v * np.log(v) ** 2))
    for dq in (-1e-3, 1e-3, -1e-5, 1e-5):
        value = information_content(DeformedCalculus(Deformer.scaled_power(1 + dq)), p)
        assert value == pytest.approx(shannon + slope * dq, abs=5 * dq * dq)
