import math

import numpy as np
import pytest

from opmeans.errors import DomainError, MeasureError, QuadratureWarning
from opmeans.measures import (
    GeneratorMeasure,
    HalfLineMeasure,
    convex_order_leq,
    dirac,
    discrete,
    eval_f,
    eval_f_half_line,
    eval_f_prime,
    eval_f_prime_at_1,
    mixture,
    power_measure,
    pushforward_to_unit,
    two_point,
    uniform_measure,
)

GRID = np.geomspace(1e-2, 1e2, 25)


# ---------------------------------------------------------------------------
# Generators of simple measures
# ---------------------------------------------------------------------------

def test_dirac_half_gives_harmonic():
    np.testing.assert_allclose(eval_f(dirac(0.5), GRID), 2 * GRID / (GRID + 1))


def test_two_point_gives_arithmetic():
    np.testing.assert_allclose(eval_f(two_point(0.3), GRID), 0.7 + 0.3 * GRID)


def test_endpoint_atoms():
    np.testing.assert_allclose(eval_f(dirac(0.0), GRID), np.ones_like(GRID))
    np.testing.assert_allclose(eval_f(dirac(1.0), GRID), GRID)


def test_eval_f_is_normalized():
    for mu in (dirac(0.2), two_point(0.7), power_measure(0.4), uniform_measure()):
        assert eval_f(mu, 1.0) == pytest.approx(1.0, abs=1e-12)


def test_eval_f_scalar_returns_float():
    assert isinstance(eval_f(dirac(0.5), 2.0), float)


@pytest.mark.parametrize("x", [0.0, -1.0, math.inf])
def test_eval_f_rejects_non_positive(x):
    with pytest.raises(DomainError):
        eval_f(dirac(0.5), x)


# ---------------------------------------------------------------------------
# Quadrature-backed densities
# ---------------------------------------------------------------------------

def test_power_half_at_four():
    assert eval_f(power_measure(0.5), 4.0) == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("p", [0.3, 0.5, 0.7])
def test_power_measure_reproduces_power(p):
    x = np.geomspace(1e-1, 1e1, 15)
    np.testing.assert_allclose(eval_f(power_measure(p), x), x ** p, atol=1e-6)


def test_uniform_measure_gives_logarithmic_kernel():
    x = np.array([0.5, 2.0, 5.0])
    np.testing.assert_allclose(eval_f(uniform_measure(), x), x * np.log(x) / (x - 1), rtol=1e-10)


def test_density_with_atoms_keeps_unit_mass():
    mu = power_measure(0.5, mass=0.6, atoms=[(0.0, 0.1), (1.0, 0.3)])
    assert mu.total_mass == pytest.approx(1.0)
    assert mu.mass_at(1.0) == pytest.approx(0.3)


def test_node_doubling_warning():
    with pytest.warns(QuadratureWarning):
        power_measure(0.5, nodes=2)


# ---------------------------------------------------------------------------
# Derivatives and weight
# ---------------------------------------------------------------------------

def test_weight_of_dirac_and_two_point():
    assert eval_f_prime_at_1(dirac(0.3)) == pytest.approx(0.3)
    assert eval_f_prime_at_1(two_point(0.8)) == pytest.approx(0.8)


def test_weight_of_power_measure():
    assert eval_f_prime_at_1(power_measure(0.3)) == pytest.approx(0.3, abs=1e-6)


def test_eval_f_prime_matches_difference_quotient():
    mu = mixture([(0.5, power_measure(0.4)), (0.5, dirac(0.7))])
    x, h = 2.5, 1e-6
    numeric = (eval_f(mu, x + h) - eval_f(mu, x - h)) / (2 * h)
    assert eval_f_prime(mu, x) == pytest.approx(numeric, rel=1e-7)


def test_value_range_and_slopes():
    assert dirac(0.25).value_range() == pytest.approx((0.0, 4.0 / 3.0))
    assert two_point(0.25).value_range() == (0.75, math.inf)
    assert dirac(0.25).slopes() == pytest.approx((4.0, 0.0))
    assert two_point(0.25).slopes() == (math.inf, 0.25)


@pytest.mark.parametrize("mu", [power_measure(0.3), power_measure(0.5), uniform_measure()], ids=["p0.3", "p0.5", "uniform"])
def test_density_measures_have_full_range(mu):
    assert mu.density_support == (0.0, 1.0)
    assert mu.value_range() == (0.0, math.inf)
    assert mu.slopes() == (math.inf, 0.0)


def test_density_support_follows_reflection_and_mixture():
    mu = power_measure(0.3, mass=0.5, atoms=[(0.5, 0.5)])
    assert mu.reflect().density_support == (0.0, 1.0)
    mixed = mixture([(0.5, dirac(0.5)), (0.5, power_measure(0.5))])
    assert mixed.density_support == (0.0, 1.0)
    assert mixed.value_range()[1] == math.inf


def test_explicit_nodes_keep_a_finite_range():
    mu = GeneratorMeasure(node_locations=[0.25, 0.75], node_weights=[0.5, 0.5])
    assert mu.density_support == ()
    assert mu.value_range() == pytest.approx((0.0, 0.5 / 0.75 + 0.5 / 0.25))


def test_invalid_density_support():
    with pytest.raises(MeasureError):
        GeneratorMeasure(node_locations=[0.5], node_weights=[1.0], density_support=(0.6, 0.4))
    with pytest.raises(MeasureError):
        GeneratorMeasure(atom_locations=[0.5], atom_masses=[1.0], density_support=(0.0, 1.0))


def test_reflect_mirrors_locations():
    mu = discrete([0.2, 0.9], [0.4, 0.6])
    np.testing.assert_allclose(np.sort(mu.reflect().locations), [0.1, 0.8])
    assert mu.reflect().barycenter == pytest.approx(1.0 - mu.barycenter)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def test_unnormalized_measure_is_rejected():
    with pytest.raises(MeasureError):
        discrete([0.2, 0.5], [0.5, 0.6])


def test_atom_outside_unit_interval_is_rejected():
    with pytest.raises(MeasureError):
        discrete([1.5], [1.0])


def test_density_node_at_endpoint_is_rejected():
    with pytest.raises(MeasureError):
        GeneratorMeasure(node_locations=[0.0], node_weights=[1.0])


def test_power_exponent_must_be_interior():
    with pytest.raises(MeasureError):
        power_measure(1.0)


# ---------------------------------------------------------------------------
# Half-line representation
# ---------------------------------------------------------------------------

def test_pushforward_of_zero_atom():
    mu = pushforward_to_unit(HalfLineMeasure(atom_locations=[0.0], atom_masses=[1.0]))
    np.testing.assert_allclose(mu.atom_locations, [0.0])


def test_pushforward_of_unit_atom():
    m = HalfLineMeasure(atom_locations=[1.0], atom_masses=[1.0])
    mu = pushforward_to_unit(m)
    np.testing.assert_allclose(mu.atom_locations, [0.5])
    np.testing.assert_allclose(eval_f(mu, GRID), eval_f_half_line(m, GRID))
    np.testing.assert_allclose(eval_f(mu, GRID), 2 * GRID / (GRID + 1))


def test_pushforward_of_infinite_atom():
    mu = pushforward_to_unit(HalfLineMeasure(atom_locations=[math.inf], atom_masses=[1.0]))
    np.testing.assert_allclose(mu.atom_locations, [1.0])
    np.testing.assert_allclose(eval_f(mu, GRID), GRID)


def test_pushforward_of_power_density():
    m = HalfLineMeasure.power_density(0.5)
    mu = pushforward_to_unit(m)
    np.testing.assert_allclose(eval_f(mu, GRID), eval_f_half_line(m, GRID), rtol=1e-12)
    np.testing.assert_allclose(eval_f(mu, GRID), np.sqrt(GRID), atol=1e-6)


def test_pushforward_requires_unit_mass():
    with pytest.raises(MeasureError):
        pushforward_to_unit(HalfLineMeasure(atom_locations=[1.0], atom_masses=[2.0]))


# ---------------------------------------------------------------------------
# Convex order
# ---------------------------------------------------------------------------

def _random_measure(rng, size=4):
    return discrete(rng.uniform(0.0, 1.0, size), rng.dirichlet(np.ones(size)))


def _piecewise_linear_dominates(mu, nu, rng, trials=200):
    for _ in range(trials):
        slopes = rng.normal(size=3)
        offsets = rng.normal(size=3)

        def u(lam):
            return np.max(np.outer(lam, slopes) + offsets, axis=1)

        if u(mu.locations) @ mu.masses > u(nu.locations) @ nu.masses + 1e-10:
            return False
    return True


def test_convex_order_sandwich(rng):
    for _ in range(20):
        mu = _random_measure(rng)
        c = mu.barycenter
        assert convex_order_leq(dirac(c), mu)
        assert convex_order_leq(mu, two_point(c))


def test_convex_order_is_reflexive(rng):
    mu = _random_measure(rng)
    assert convex_order_leq(mu, mu)


def test_convex_order_needs_equal_barycenters():
    assert not convex_order_leq(dirac(0.3), dirac(0.4))


def test_spread_does_not_precede_point_mass():
    assert not convex_order_leq(two_point(0.5), dirac(0.5))


def test_convex_order_agrees_with_brute_force(rng):
    for _ in range(30):
        mu = _random_measure(rng)
        nu = mixture([(0.5, mu), (0.5, two_point(mu.barycenter))])
        assert convex_order_leq(mu, nu)
        assert _piecewise_linear_dominates(mu, nu, rng)

        other = _random_measure(rng)
        shifted = mixture([(0.5, other), (0.5, dirac(other.barycenter))])
        if convex_order_leq(other, shifted):
            assert _piecewise_linear_dominates(other, shifted, rng)
        assert convex_order_leq(shifted, other)
