import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phifam import (
    DeformedCalculus,
    Deformer,
    DivergentIntegral,
    MeasureSpace,
    PhiFamily,
    RandomVariable,
    SingularMetric,
    classical_crb_sides,
    crb_sides,
    dual_coordinates,
    duality_residuals,
    fisher_matrix,
    g_matrix,
    legendre_residual,
    project,
    regularity_residual,
    score,
)
from phifam.family import Estimator
from phifam.fixtures import FIVE_E_MINUS_13, truncated_uniform_pair
from phifam.geometry import covariance_identity_residual, projection_report, score_derivative


def test_example_pair_metric(triangle_pair):
    for t in (0.5, 1.0, 2.0):
        g = g_matrix(triangle_pair, t).entries[0, 0]
        assert g * t * t / 4 == pytest.approx(FIVE_E_MINUS_13, abs=1e-4)


def test_example_pair_bound(triangle_pair):
    est = triangle_pair.estimator()
    for t in (0.5, 1.0, 2.0):
        lhs, rhs = crb_sides(triangle_pair, est, t, [1.0], [1.0])
        assert lhs == pytest.approx(9 * t * t, rel=1e-4)
        assert rhs == pytest.approx(t * t / (4 * FIVE_E_MINUS_13), rel=1e-4)
        assert lhs >= rhs


def test_fisher_information_diverges_for_triangle(triangle_pair):
    assert fisher_matrix(triangle_pair, 1.0).divergent
    with pytest.raises(DivergentIntegral):
        classical_crb_sides(triangle_pair, triangle_pair.estimator(), 1.0, [1.0], [1.0])


def test_identity_family_metric_is_fisher(identity):
    pair = identity.pair()
    for t in (0.5, 2.0):
        g = g_matrix(pair, t)
        fisher = fisher_matrix(pair, t)
        assert not fisher.divergent
        assert g.entries[0, 0] == pytest.approx(1.0 / t**2, rel=1e-6)
        assert fisher.entries[0, 0] == pytest.approx(1.0 / t**2, rel=1e-6)
        lhs, rhs = classical_crb_sides(identity, identity.estimator, t, [1.0], [1.0])
        assert lhs == pytest.approx(rhs, rel=1e-5)


def test_constant_family_bound_is_tight(constant):
    pair = constant.pair()
    for Theta in (0.25, 1.0, 4.0):
        t = 1 / math.sqrt(Theta)
        assert g_matrix(pair, Theta).entries[0, 0] == pytest.approx(t**4 / 3, abs=1e-5)
        lhs, rhs = crb_sides(pair, pair.estimator(), Theta, [1.0], [1.0])
        assert abs(lhs - rhs) <= 2e-5 * max(1.0, rhs)


def test_info_matrix_helpers(half_power):
    g = g_matrix(half_power.pair(), 1.0)
    assert g.min_eigenvalue > 0
    assert g.condition == pytest.approx(1.0)
    assert g.inverse()[0, 0] == pytest.approx(1.0 / g.entries[0, 0])
    assert "entries" in g.to_json() or isinstance(g.to_json(), (dict, list))


def test_regularity_holds_for_canonical_pairs(any_family):
    assert np.abs(regularity_residual(any_family.pair(), 1.2)).max() < 2e-5


def test_regularity_fails_for_truncated_escort():
    assert np.abs(regularity_residual(truncated_uniform_pair(), 1.0)).max() > 0.1


def test_covariance_identity(any_family):
    assert covariance_identity_residual(any_family, 1.1) < 1e-5


@pytest.mark.parametrize("theta", [0.6, 1.0, 2.5])
def test_projection_identities(any_family, theta):
    pair = any_family.pair()
    for A in (RandomVariable.constant(1.0), score(pair, theta, 0), score_derivative(pair, theta, 0, 0)):
        rep = projection_report(pair, theta, A)
        assert abs(rep["mean"]) < 1e-6
        assert max(abs(v) for v in rep["inner"]) < 1e-6
        assert rep["norm"] < 1e-5


def test_projection_keeps_orthogonal_part(identity):
    pair = identity.pair()
    rep = projection_report(pair, 1.0, RandomVariable.monomial(1.0, 2.0))
    assert abs(rep["mean"]) < 1e-8
    assert abs(rep["inner"][0]) < 1e-8
    assert rep["norm"] > 0.1


def test_singular_metric_raises():
    fam = PhiFamily(
        DeformedCalculus(Deformer.power(0.5)),
        MeasureSpace.lebesgue(0.0, math.inf),
        (RandomVariable.monomial(), RandomVariable.monomial()),
    )
    with pytest.raises(SingularMetric):
        project(fam.pair(), [0.5, 0.5], RandomVariable.monomial(1.0, 2.0))


@pytest.mark.parametrize("theta", [0.5, 1.5, 3.0])
def test_duality(any_family, theta):
    res = duality_residuals(any_family, theta).norms()
    assert max(res.values()) <= 1e-4
    assert abs(legendre_residual(any_family, theta, 1.0)) <= 2e-5


def test_dual_point_gap_is_zero_by_construction(half_power):
    pt = dual_coordinates(half_power, 1.0)
    assert pt.legendre_gap == pytest.approx(0.0, abs=1e-12)


_FAMILIES = {}


def _family(name):
    from phifam.fixtures import constant_family, identity_family, power_family

    if name not in _FAMILIES:
        _FAMILIES[name] = {"identity": identity_family, "q=0.5": lambda: power_family(0.5), "q=1.5": lambda: power_family(1.5), "constant": constant_family}[name]()
    return _FAMILIES[name]


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from(["identity", "q=0.5", "q=1.5", "constant"]),
    st.floats(0.4, 3.0),
    st.floats(-2.0, 2.0),
    st.floats(0.1, 2.0),
    st.floats(-1.0, 1.0),
)
def test_bound_holds_for_random_estimators(name, theta, a, b, c):
    """Escort variance of any estimator is at least the inverse metric after rescaling."""
    fam = _family(name)
    est = Estimator((RandomVariable(lambda x: a + b * x + c * np.sqrt(x), "mix"),))
    lhs, rhs = crb_sides(fam.pair(), est, theta, [1.0], [1.0])
    assert lhs >= rhs * (1 - 1e-6)


def test_legendre_sweep_matches_single_residuals(half_power):
    from phifam import legendre_sweep

    grid = [0.5, 0.9, 1.6, 2.4]
    swept = legendre_sweep(half_power, grid)
    single = [legendre_residual(half_power, t, grid[0]) for t in grid]
    np.testing.assert_allclose(swept, single, atol=1e-12)
    assert np.abs(swept).max() <= 2e-5


def test_escort_covariance_is_metric_over_z_squared(any_family):
    for t in (0.7, 2.0):
        first, second = any_family.escort_moments(t)
        cov = second[0, 0] - first[0] ** 2
        g = g_matrix(any_family.pair(), t).entries[0, 0]
        assert cov == pytest.approx(g / any_family.zet(t) ** 2, abs=2e-5)


def test_scale_hessian_is_negative(any_family):
    from phifam.geometry import hessian_of_scale

    for t in (0.5, 1.0, 2.5):
        assert np.linalg.eigvalsh(hessian_of_scale(any_family, t)).max() <= 1e-9
