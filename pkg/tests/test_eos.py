import math

import numpy as np
import pytest

from gasflow.eos import (
    EosParams,
    PotentialCoeffs,
    cnga_b_coefficients,
    density,
    density_derivative,
    dimensionless_coeffs,
    in_generalized_domain,
    in_physical_domain,
    potential,
    potential_derivative,
    potential_inverse,
)
from gasflow.errors import NonPositivePotential, OverflowingCoefficient
from gasflow.models import EosKind
from gasflow.scaling import DimensionlessGroups

CNGA = EosParams(kind=EosKind.CNGA)


def test_cnga_coefficients_at_standard_conditions():
    b1, b2 = cnga_b_coefficients(CNGA)
    assert b1 == pytest.approx(1.00244, rel=1e-4)
    assert b2 == pytest.approx(2.403e-8, rel=1e-2)


def test_cnga_coefficients_need_cnga_params():
    with pytest.raises(ValueError):
        cnga_b_coefficients(EosParams())


def test_overflowing_specific_gravity():
    with pytest.raises(OverflowingCoefficient):
        cnga_b_coefficients(EosParams(kind=EosKind.CNGA, specific_gravity=1000.0))


def test_eos_params_reject_non_positive_values():
    with pytest.raises(ValueError):
        EosParams(temperature=0.0)
    assert EosParams().sound_speed == pytest.approx(math.sqrt(518.28 * 288.706))


def test_dimensionless_coefficients():
    groups = DimensionlessGroups(mach=0.01, euler=1.0)
    assert dimensionless_coeffs(EosParams(), groups, 5e6) == PotentialCoeffs(1.0, 0.0)

    b1, b2 = cnga_b_coefficients(CNGA)
    coeffs = dimensionless_coeffs(CNGA, groups, 5e6)
    assert coeffs.b1_bar == pytest.approx(b1)
    assert coeffs.b2_bar == pytest.approx(5e6 * b2)


def test_potential_values_and_derivatives():
    c = PotentialCoeffs(1.0, 0.5)
    assert potential(0.0, c) == 0.0
    assert potential(2.0, c) == pytest.approx(2.0 + 4.0 / 3.0)
    assert density(2.0, c) == pytest.approx(4.0)
    assert potential_derivative(2.0, c) == density(2.0, c)
    assert density_derivative(2.0, c) == pytest.approx(3.0)

    p = np.linspace(-3.0, 3.0, 13)
    h = 1e-6
    numeric = (potential(p + h, c) - potential(p - h, c)) / (2 * h)
    np.testing.assert_allclose(numeric, density(p, c), atol=1e-8)


@pytest.mark.parametrize("coeffs", [PotentialCoeffs.ideal(), PotentialCoeffs(1.0024, 0.12), PotentialCoeffs(2.0, 3.0)])
def test_potential_inverse_round_trip(coeffs):
    for p in np.geomspace(1e-3, 50.0, 25):
        assert potential_inverse(potential(p, coeffs), coeffs) == pytest.approx(p, rel=1e-10)


def test_potential_inverse_rejects_non_positive():
    for value in (0.0, -1.0):
        with pytest.raises(NonPositivePotential):
            potential_inverse(value, PotentialCoeffs(1.0, 0.1))


def test_generalized_and_physical_domains():
    ideal = PotentialCoeffs.ideal()
    assert in_generalized_domain(0.3, ideal)
    assert not in_generalized_domain(-0.3, ideal)
    assert not in_generalized_domain(0.0, ideal)

    c = PotentialCoeffs(1.0, 0.5)
    threshold = -1.5 * c.b1_bar / c.b2_bar
    assert in_generalized_domain(threshold, c)
    assert in_generalized_domain(threshold - 1.0, c)
    assert not in_generalized_domain(-1.0, c)
    assert potential(threshold, c) == pytest.approx(0.0, abs=1e-12)

    assert in_physical_domain(0.5, c)
    assert not in_physical_domain(threshold - 1.0, c)
    assert not in_physical_domain(-1.0, c)


def _domain_samples(rng, c, size):
    positive = rng.uniform(1e-3, 5.0, size)
    if c.is_ideal:
        return positive
    threshold = -1.5 * c.b1_bar / c.b2_bar
    negative = rng.uniform(threshold - 20.0, threshold, size)
    return np.concatenate([positive, negative])


@pytest.mark.parametrize("coeffs", [PotentialCoeffs.ideal(), PotentialCoeffs(1.0024, 0.12), PotentialCoeffs(1.5, 2.0)])
def test_potential_is_increasing_on_the_generalized_domain(coeffs):
    rng = np.random.default_rng(21)
    samples = _domain_samples(rng, coeffs, 500)
    assert all(in_generalized_domain(float(p), coeffs) for p in samples)
    for _ in range(2000):
        lo, hi = sorted(rng.choice(samples, size=2, replace=False))
        if lo == hi:
            continue
        assert potential(lo, coeffs) < potential(hi, coeffs)


@pytest.mark.parametrize("coeffs", [PotentialCoeffs.ideal(), PotentialCoeffs(1.0024, 0.12)])
def test_compressor_ratio_preserves_potential_order(coeffs):
    rng = np.random.default_rng(22)
    samples = _domain_samples(rng, coeffs, 300)
    checked = 0
    for _ in range(3000):
        lo, hi = sorted(rng.choice(samples, size=2, replace=False))
        alpha = float(rng.uniform(0.2, 3.0))
        if lo == hi or not (in_generalized_domain(alpha * lo, coeffs) and in_generalized_domain(alpha * hi, coeffs)):
            continue
        assert potential(alpha * lo, coeffs) < potential(alpha * hi, coeffs)
        checked += 1
    assert checked > 1000
