import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phifam import (
    DeformedCalculus,
    Deformer,
    EscortPair,
    MeasureSpace,
    OutsideDomain,
    PhiFamily,
    RandomVariable,
    curl_residual,
    escort_condition_residual,
    normalization_residual,
    solve_G,
)
from phifam.family import alpha_family_density, alpha_from_q, as_theta


@pytest.fixture(scope="module")
def quadratic():
    """q = 0.5 with statistics (x, x^2): a two-parameter family on the half-line."""
    return PhiFamily(
        DeformedCalculus(Deformer.power(0.5)),
        MeasureSpace.lebesgue(0.0, math.inf),
        (RandomVariable.monomial(), RandomVariable.monomial(1.0, 2.0)),
        "quadratic",
    )


def test_identity_family_is_exponential(identity):
    for t in (0.5, 1.0, 3.0):
        assert solve_G(identity, t) == pytest.approx(math.log(t), abs=1e-10)
        x = np.array([0.0, 0.7, 4.0])
        np.testing.assert_allclose(identity.pdf_at(t, x), t * np.exp(-t * x), rtol=1e-9)
        # phi = identity makes the escort coincide with the density
        np.testing.assert_allclose(identity.escort_at(t, x), t * np.exp(-t * x), rtol=1e-8)
        assert identity.mean(t)[0] == pytest.approx(1.0 / t, rel=1e-9)


def test_constant_family_closed_form(constant):
    for Theta in (0.25, 1.0, 4.0):
        assert constant.solve_G(Theta) == pytest.approx(2.0 * math.sqrt(Theta) - 1.0, abs=1e-10)
    assert constant.pdf_at(1.0, 0.0) == pytest.approx(2.0)
    assert constant.pdf_at(1.0, 2.0) == 0.0
    assert constant.support_breakpoints(1.0) == pytest.approx((1.0,))


def test_power_family_closed_form(half_power):
    G = half_power.solve_G(1.0)
    assert G == pytest.approx(12.0 ** (1.0 / 3.0) - 2.0, abs=1e-9)
    y = G - np.linspace(0, 5, 11)
    np.testing.assert_allclose(half_power.pdf_at(1.0, np.linspace(0, 5, 11)), alpha_family_density(alpha_from_q(0.5), y), atol=1e-12)


def test_outside_domain(identity, constant):
    with pytest.raises(OutsideDomain):
        identity.solve_G(-1.0)
    with pytest.raises(OutsideDomain):
        constant.solve_G(0.0)
    assert not identity.in_domain(-0.5)
    assert identity.in_domain(0.5)


def test_theta_validation(identity):
    with pytest.raises(ValueError):
        as_theta([1.0, 2.0], 1)
    with pytest.raises(ValueError):
        identity.solve_G(math.nan)


def test_densities_are_normalized(any_family):
    for t in (0.5, 1.7):
        assert abs(normalization_residual(any_family.pdf(t))) < 1e-9
        assert abs(normalization_residual(any_family.escort(t))) < 1e-9


def test_escort_condition_holds_for_canonical_pair(any_family):
    pair = any_family.pair()
    assert escort_condition_residual(pair, 1.3, 0) < 2e-5


def test_escort_condition_fails_for_example_pair(triangle_pair):
    assert escort_condition_residual(triangle_pair, 1.0, 0) > 0.1


def test_discrete_family():
    space = MeasureSpace.discrete([0.0, 1.0, 2.0, 3.0])
    fam = PhiFamily(DeformedCalculus(Deformer.power(0.5)), space, (RandomVariable.monomial(),))
    for t in (-0.5, 0.0, 0.8):
        assert abs(normalization_residual(fam.pdf(t))) < 1e-12


def test_concurrent_solves_agree(half_power):
    fam = PhiFamily(half_power.calc, half_power.space, half_power.statistics)
    grid = np.linspace(0.5, 3.0, 16)
    with ThreadPoolExecutor(4) as pool:
        par = list(pool.map(fam.solve_G, np.concatenate([grid, grid])))
    serial = [half_power.solve_G(t) for t in grid]
    np.testing.assert_allclose(par[:16], serial, rtol=0, atol=1e-13)
    np.testing.assert_allclose(par[16:], serial, rtol=0, atol=1e-13)


def test_two_parameter_family_normalizes(quadratic):
    th = [0.7, 0.4]
    assert abs(normalization_residual(quadratic.pdf(th))) < 1e-9
    assert escort_condition_residual(quadratic.pair(), th, 1) < 2e-5


def test_curl_vanishes_for_family(quadratic):
    assert curl_residual(quadratic.pair(), [0.7, 0.4]) < 1e-6


def test_curl_detects_non_gradient_means():
    space = MeasureSpace.discrete([0.0, 1.0, 2.0])

    def base(th, x):
        p1 = 0.3 + 0.05 * th[1]
        p2 = 0.3 - 0.05 * th[0]
        return np.select([x == 0, x == 1, x == 2], [1 - p1 - p2, p1, p2], 0.0)

    pair = EscortPair(
        space,
        base,
        base,
        statistics=(RandomVariable.table([1.0], [1.0]), RandomVariable.table([2.0], [1.0])),
        n=2,
    )
    assert curl_residual(pair, [0.1, 0.2]) == pytest.approx(0.1, abs=1e-8)


@settings(max_examples=15, deadline=None)
@given(
    st.tuples(st.floats(0.3, 2.0), st.floats(0.05, 1.5)),
    st.tuples(st.floats(0.3, 2.0), st.floats(0.05, 1.5)),
    st.floats(0.1, 0.9),
)
def test_scale_function_is_concave(quadratic, a, b, lam):
    a, b = np.array(a), np.array(b)
    mid = lam * a + (1 - lam) * b
    lhs = quadratic.solve_G(mid)
    rhs = lam * quadratic.solve_G(a) + (1 - lam) * quadratic.solve_G(b)
    assert lhs >= rhs - 1e-9


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 4.0), st.floats(0.3, 4.0), st.floats(0.1, 0.9))
def test_one_parameter_scale_functions_are_concave(a, b, lam):
    for fam in (_FAMS["identity"], _FAMS["half"], _FAMS["constant"]):
        mid = fam.solve_G(lam * a + (1 - lam) * b)
        assert mid >= lam * fam.solve_G(a) + (1 - lam) * fam.solve_G(b) - 1e-9


def _build():
    from phifam.fixtures import constant_family, identity_family, power_family

    return {"identity": identity_family(), "half": power_family(0.5), "constant": constant_family()}


_FAMS = _build()


def test_escort_mean_is_gradient_of_scale(any_family):
    from phifam._numdiff import partial

    for t in (0.6, 1.5):
        first, _ = any_family.escort_moments(t)
        dG = float(partial(lambda th: any_family.solve_G(th), np.array([t]), 0))
        assert first[0] == pytest.approx(dG, abs=2e-5)


def test_panel_doubling_is_stable():
    from phifam.fixtures import power_family

    coarse, fine = power_family(0.5, panels=256), power_family(0.5, panels=512)
    for t in (0.5, 2.0):
        assert coarse.mean(t)[0] == pytest.approx(fine.mean(t)[0], rel=1e-7)
