import math

import numpy as np
import pytest
from scipy import linalg

from opmeans.errors import DomainError
from opmeans.hermitian import random_invertible, random_spd, sandwich
from opmeans.kubo_ando import arithmetic, geometric, geometric_mean, heinz, logarithmic, mean, measure_mean
from opmeans.measures import dirac, power_measure
from opmeans.divergences import (
    GeodesicPoint,
    SigmaPotential,
    bw_curve_verbatim,
    bw_geodesic,
    bw_interpolant,
    d_bw,
    d_rtm,
    g_sigma,
    phi_mu,
    phi_sigma,
    relative_spectrum,
    rtm_geodesic,
    rtm_velocity,
)


# ---------------------------------------------------------------------------
# Riemannian trace metric
# ---------------------------------------------------------------------------

def test_relative_spectrum_of_scalars():
    np.testing.assert_allclose(relative_spectrum(2.0, 8.0), [4.0])


def test_d_rtm_examples(spd_pair):
    A, B = spd_pair
    assert d_rtm(A, A) == pytest.approx(0.0, abs=1e-12)
    assert d_rtm(1.0, math.e ** 2) == pytest.approx(2.0)
    assert d_rtm(A, B) == pytest.approx(d_rtm(B, A), rel=1e-10)


def test_distances_of_equal_inputs_are_exactly_zero(spd_pair):
    A, _ = spd_pair
    copy = np.array(A.entries)
    assert d_rtm(A, copy) == 0.0
    assert d_bw(A, copy) == 0.0


def test_d_rtm_ignores_ulp_level_spectrum(spd_pair):
    A, _ = spd_pair
    assert d_rtm(A, sandwich(np.eye(3) * (1.0 + 2.0 ** -52), A.entries)) <= 1e-14


def test_rtm_velocity_between_equal_points(spd_pair):
    A, _ = spd_pair
    np.testing.assert_allclose(rtm_velocity(A, A, 0.5).entries, 0.0, atol=1e-12)


def test_d_rtm_congruence_invariant(spd_pair, rng):
    A, B = spd_pair
    C = random_invertible(3, rng)
    moved = d_rtm(sandwich(C, A.entries), sandwich(C, B.entries))
    assert moved == pytest.approx(d_rtm(A, B), rel=1e-9)


def test_rtm_geodesic_endpoints_and_midpoint(spd_pair):
    A, B = spd_pair
    np.testing.assert_allclose(rtm_geodesic(A, B, 0.0).value.entries, A.entries, atol=1e-12)
    np.testing.assert_allclose(rtm_geodesic(A, B, 1.0).value.entries, B.entries, atol=1e-10)
    midpoint = rtm_geodesic(A, B, 0.5)
    assert isinstance(midpoint, GeodesicPoint)
    np.testing.assert_allclose(midpoint.value.entries, geometric_mean(A, B).entries, atol=1e-12)


def test_rtm_geodesic_has_constant_speed(spd_pair):
    A, B = spd_pair
    total = d_rtm(A, B)
    for t in (0.2, 0.5, 0.9):
        point = rtm_geodesic(A, B, t).value
        assert d_rtm(A, point) == pytest.approx(t * total, rel=1e-9)
        assert d_rtm(point, B) == pytest.approx((1 - t) * total, rel=1e-9)


def test_rtm_geodesic_rejects_t_outside_unit_interval(spd_pair):
    with pytest.raises(DomainError):
        rtm_geodesic(*spd_pair, 1.5)


def test_rtm_velocity_examples(spd_pair):
    A, _ = spd_pair
    np.testing.assert_allclose(rtm_velocity(A, A, 0.3).entries, 0.0, atol=1e-12)
    # scalars 1 and e^2: gamma(t) = e^{2t}
    assert rtm_velocity(1.0, math.e ** 2, 0.25).entries[0, 0].real == pytest.approx(2 * math.exp(0.5))


def test_rtm_velocity_matches_difference_quotient(spd_pair):
    A, B = spd_pair
    t, h = 0.4, 1e-6
    numeric = (rtm_geodesic(A, B, t + h).value.entries - rtm_geodesic(A, B, t - h).value.entries) / (2 * h)
    np.testing.assert_allclose(rtm_velocity(A, B, t).entries, numeric, atol=1e-7)


# ---------------------------------------------------------------------------
# Bures-Wasserstein
# ---------------------------------------------------------------------------

def test_d_bw_examples(spd_pair):
    A, B = spd_pair
    assert d_bw(A, A) < 1e-6
    assert d_bw(1.0, 4.0) == pytest.approx(1.0)
    assert d_bw(A, B) == pytest.approx(d_bw(B, A), rel=1e-9)


def test_d_bw_of_commuting_pair():
    a, b = np.array([1.0, 2.0, 5.0]), np.array([3.0, 0.5, 5.0])
    expected = math.sqrt(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2))
    assert d_bw(np.diag(a), np.diag(b)) == pytest.approx(expected)


def test_d_bw_unitary_invariant(spd_pair, rng):
    A, B = spd_pair
    U, _ = linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    assert d_bw(sandwich(U, A.entries), sandwich(U, B.entries)) == pytest.approx(d_bw(A, B), rel=1e-9)


def test_bw_curve_verbatim_scalar():
    # (1-t)^2 a^2 + t^2 b^2 + 2 t (1-t) sqrt(ab) at a = 1, b = 4, t = 1/2
    assert bw_curve_verbatim(1.0, 4.0, 0.5).entries[0, 0].real == pytest.approx(5.25)


def test_bw_curve_verbatim_endpoints(spd_pair):
    A, B = spd_pair
    np.testing.assert_allclose(bw_curve_verbatim(A, B, 0.0).entries, A.entries @ A.entries, atol=1e-12)
    np.testing.assert_allclose(bw_curve_verbatim(A, B, 1.0).entries, B.entries @ B.entries, atol=1e-12)


def test_bw_geodesic_wraps_verbatim_curve(spd_pair):
    A, B = spd_pair
    point = bw_geodesic(A, B, 0.3)
    assert point.t == 0.3
    np.testing.assert_allclose(point.value.entries, bw_curve_verbatim(A, B, 0.3).entries)


def test_bw_interpolant_endpoints_and_scalar():
    assert bw_interpolant(1.0, 4.0, 0.5).entries[0, 0].real == pytest.approx(2.25)
    A, B = random_spd(3, 10.0, 5), random_spd(3, 10.0, 6)
    np.testing.assert_allclose(bw_interpolant(A, B, 0.0).entries, A.entries, atol=1e-12)
    np.testing.assert_allclose(bw_interpolant(A, B, 1.0).entries, B.entries, atol=1e-10)


def test_bw_interpolant_is_a_geodesic(spd_pair):
    A, B = spd_pair
    total = d_bw(A, B)
    for t in (0.25, 0.5, 0.75):
        point = bw_interpolant(A, B, t)
        assert d_bw(A, point) == pytest.approx(t * total, rel=1e-5)


# ---------------------------------------------------------------------------
# Hellinger divergence of a measure
# ---------------------------------------------------------------------------

def test_phi_mu_vanishes_on_diagonal(spd_pair):
    A, _ = spd_pair
    assert phi_mu(power_measure(0.5), A, A) == pytest.approx(0.0, abs=1e-10)


def test_phi_mu_scalar_example():
    assert phi_mu(dirac(0.5), 1.0, 4.0) == pytest.approx(0.9)


def test_phi_mu_is_trace_gap(spd_pair):
    A, B = spd_pair
    mu = power_measure(0.4)
    c = mu.barycenter
    expected = np.trace((1 - c) * A.entries + c * B.entries - mean(measure_mean(mu), A, B).entries).real
    assert phi_mu(mu, A, B) == pytest.approx(expected, rel=1e-10)


def test_phi_mu_is_nonnegative(rng):
    for _ in range(10):
        A, B = random_spd(3, 50.0, rng), random_spd(3, 50.0, rng)
        assert phi_mu(dirac(rng.uniform(0.05, 0.95)), A, B) >= -1e-12


# ---------------------------------------------------------------------------
# Divergence of a symmetric mean
# ---------------------------------------------------------------------------

def test_g_sigma_values():
    P = SigmaPotential(geometric(0.5))
    assert g_sigma(P, 1.0) == 0.0
    assert g_sigma(P, 2.0) == pytest.approx(0.5, abs=1e-12)
    assert g_sigma(SigmaPotential(arithmetic(0.5)), 2.0) == pytest.approx(1 - math.log(3) / 2, abs=1e-12)


def test_g_sigma_derivatives():
    P = SigmaPotential(heinz(0.3))
    x, h = 1.7, 1e-5
    assert P.g_prime(1.0) == pytest.approx(0.0, abs=1e-10)
    assert P.g_prime(x) == pytest.approx((P.g(x + h) - P.g(x - h)) / (2 * h), rel=1e-5)
    assert P.g_second(x) == pytest.approx((P.g_prime(x + h) - P.g_prime(x - h)) / (2 * h), rel=1e-5)


def test_g_sigma_outside_domain():
    with pytest.raises(DomainError):
        g_sigma(SigmaPotential(arithmetic(0.5)), 0.25)


def test_sigma_potential_needs_symmetric_mean():
    with pytest.raises(DomainError):
        SigmaPotential(arithmetic(0.25))


def test_phi_sigma_examples(spd_pair):
    A, B = spd_pair
    P = SigmaPotential(geometric(0.5))
    assert phi_sigma(P, A, A) == pytest.approx(0.0, abs=1e-12)
    assert phi_sigma(P, 1.0, 4.0) == pytest.approx(2.25, abs=1e-12)
    # g(x) = x + 1/x - 2 on the relative spectrum
    spectrum = relative_spectrum(A, B)
    assert phi_sigma(P, A, B) == pytest.approx(np.sum(spectrum + 1 / spectrum - 2), rel=1e-9)


def test_phi_sigma_infinite_off_range():
    P = SigmaPotential(arithmetic(0.5))
    assert phi_sigma(P, 6.0, 3.0) == math.inf
    assert phi_sigma(P, 6.0, 2.9) == math.inf
    assert math.isfinite(phi_sigma(P, 6.0, 3.5))


@pytest.mark.parametrize("sigma", [geometric(0.5), heinz(0.25), logarithmic()], ids=lambda s: s.name)
def test_phi_sigma_is_convex_along_segments(sigma, rng):
    P = SigmaPotential(sigma)
    A, X, Y = (random_spd(2, 5.0, rng) for _ in range(3))
    ends = (phi_sigma(P, A, X), phi_sigma(P, A, Y))
    middle = phi_sigma(P, A, (X.entries + Y.entries) / 2)
    assert middle <= (ends[0] + ends[1]) / 2 + 1e-10
