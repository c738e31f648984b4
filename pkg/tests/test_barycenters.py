import math

import numpy as np
import pytest
from scipy import optimize

from opmeans.barycenters import (
    SolverConfig,
    SolverReport,
    WeightedEnsemble,
    bw_barycenter,
    bw_fixed_point_map,
    direct_minimize,
    geometric_barycenter_closed_form,
    gradient_check,
    hellinger_barycenter,
    ka_barycenter,
    ka_residual,
    karcher_mean,
    karcher_residual,
    loss_gradient,
    loss_Q,
    perturbation_check,
    solve,
    stationarity_residual,
)
from opmeans.divergences import bw_interpolant, d_bw, d_rtm
from opmeans.errors import DegenerateMeasureError, DomainError, RangeRestrictionError
from opmeans.hermitian import random_invertible, random_spd
from opmeans.kubo_ando import (
    ah_geometric,
    arithmetic,
    geometric,
    geometric_mean,
    heinz,
    logarithmic,
    mean,
    measure_mean,
    normalized_parallel_sum,
)
from opmeans.measures import dirac, power_measure, two_point

TIGHT = SolverConfig(tol=1e-12)


# ---------------------------------------------------------------------------
# Inputs and configuration
# ---------------------------------------------------------------------------

def test_ensemble_validation():
    with pytest.raises(DomainError):
        WeightedEnsemble((np.eye(2), np.eye(2)), np.array([0.5, 0.6]))
    with pytest.raises(DomainError):
        WeightedEnsemble((np.eye(2), np.eye(3)), np.array([0.5, 0.5]))
    with pytest.raises(DomainError):
        WeightedEnsemble((np.eye(2),), np.array([0.5, 0.5]))
    with pytest.raises(DomainError):
        WeightedEnsemble((), np.array([]))


def test_ensemble_uniform_weights():
    E = WeightedEnsemble.uniform([np.eye(2), 2 * np.eye(2), 3 * np.eye(2)])
    np.testing.assert_allclose(E.weights, np.full(3, 1 / 3))
    np.testing.assert_allclose(E.arithmetic_mean().entries, 2 * np.eye(2))


@pytest.mark.parametrize(
    "changes",
    [{"tol": 0.0}, {"max_iter": 0}, {"damping": 1.5}, {"damping_floor": 2.0}, {"init": "median"}],
)
def test_solver_config_validation(changes):
    with pytest.raises(ValueError):
        SolverConfig(**changes)


# ---------------------------------------------------------------------------
# Karcher mean
# ---------------------------------------------------------------------------

def test_karcher_single_matrix(spd_pair):
    A, _ = spd_pair
    X, report = karcher_mean(WeightedEnsemble((A,), np.array([1.0])))
    assert report.converged and report.iterations == 0
    np.testing.assert_allclose(X.entries, A.entries, atol=1e-12)


def test_karcher_commuting_matrices():
    diagonals = np.array([[1.0, 2.0], [4.0, 0.5], [3.0, 3.0]])
    weights = np.array([0.2, 0.3, 0.5])
    E = WeightedEnsemble(tuple(np.diag(d) for d in diagonals), weights)
    X, report = karcher_mean(E, TIGHT)
    assert report.converged
    np.testing.assert_allclose(X.entries, np.diag(np.exp(weights @ np.log(diagonals))), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_karcher_midpoint_is_geometric_mean(seed):
    A, B = random_spd(3, 20.0, seed), random_spd(3, 20.0, seed + 100)
    X, report = karcher_mean(WeightedEnsemble.uniform([A, B]))
    assert report.converged
    np.testing.assert_allclose(X.entries, geometric_mean(A, B).entries, atol=1e-8)


def test_karcher_residual_vanishes(ensemble):
    X, report = karcher_mean(ensemble)
    assert report.converged
    assert karcher_residual(ensemble, X).norm <= 1e-10 * (1 + X.norm)
    assert report.final_residual == report.residual_history[-1]


def test_karcher_equivariance(ensemble, rng):
    X, _ = karcher_mean(ensemble, TIGHT)
    C = random_invertible(3, rng)
    moved, _ = karcher_mean(ensemble.congruent(C), TIGHT)
    np.testing.assert_allclose(moved.entries, C @ X.entries @ C.conj().T, atol=1e-8)
    permuted, _ = karcher_mean(ensemble.permuted([2, 0, 1]), TIGHT)
    np.testing.assert_allclose(permuted.entries, X.entries, atol=1e-9)


def test_karcher_idempotent(spd_pair):
    A, _ = spd_pair
    X, _ = karcher_mean(WeightedEnsemble.uniform([A, A, A]))
    np.testing.assert_allclose(X.entries, A.entries, atol=1e-10)


def test_karcher_passes_perturbation_check(ensemble):
    X, _ = karcher_mean(ensemble)
    assert perturbation_check("rtm", None, ensemble, X, count=100).passed


# ---------------------------------------------------------------------------
# Bures-Wasserstein barycenter
# ---------------------------------------------------------------------------

def test_bw_scalars():
    X, report = bw_barycenter(WeightedEnsemble.uniform([1.0, 9.0]), SolverConfig(tol=1e-14))
    assert report.converged
    assert X.entries[0, 0].real == pytest.approx(4.0, abs=1e-12)


def test_bw_random_scalars(rng):
    values = rng.uniform(0.5, 5.0, size=4)
    weights = rng.dirichlet(np.ones(4))
    X, _ = bw_barycenter(WeightedEnsemble(tuple(values), weights), SolverConfig(tol=1e-14))
    assert X.entries[0, 0].real == pytest.approx((weights @ np.sqrt(values)) ** 2, rel=1e-11)


def test_bw_is_a_fixed_point(ensemble):
    X, report = bw_barycenter(ensemble)
    assert report.converged
    np.testing.assert_allclose(bw_fixed_point_map(ensemble, X).entries, X.entries, atol=1e-9)


def test_bw_single_matrix(spd_pair):
    A, _ = spd_pair
    X, report = bw_barycenter(WeightedEnsemble((A,), np.array([1.0])))
    assert report.iterations == 0
    np.testing.assert_allclose(X.entries, A.entries, atol=1e-12)


def test_bw_passes_perturbation_check(make_ensemble):
    E = make_ensemble(3, size=3, dim=4)
    X, _ = bw_barycenter(E)
    assert perturbation_check("bw", None, E, X, count=100).passed


def test_bw_two_point_lies_on_interpolant(spd_pair):
    A, B = spd_pair
    for t in (0.25, 0.5, 0.75):
        X, _ = bw_barycenter(WeightedEnsemble((A, B), np.array([1 - t, t])), TIGHT)
        np.testing.assert_allclose(X.entries, bw_interpolant(A, B, t).entries, atol=1e-8)


def test_bw_loss_is_weighted_squared_distance(ensemble):
    X = ensemble.arithmetic_mean()
    expected = sum(w * d_bw(A, X) ** 2 for w, A in zip(ensemble.weights, ensemble.matrices))
    assert loss_Q("bw", None, ensemble, X) == pytest.approx(expected)


# ---------------------------------------------------------------------------
# Hellinger barycenter
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("mu", [dirac(1.0), dirac(0.0), two_point(0.5)], ids=["dirac1", "dirac0", "two-point"])
def test_hellinger_rejects_degenerate_measures(mu, ensemble):
    with pytest.raises(DegenerateMeasureError):
        hellinger_barycenter(mu, ensemble)


def test_hellinger_scalar_matches_one_dimensional_minimum():
    values, weights = np.array([1.0, 4.0]), np.array([0.5, 0.5])
    X, report = hellinger_barycenter(dirac(0.5), WeightedEnsemble(tuple(values), weights), TIGHT)
    assert report.converged

    def derivative(x):
        return weights @ (0.5 - 2 * values ** 2 / (values + x) ** 2)

    root = optimize.brentq(derivative, 1.0, 4.0, xtol=1e-15)
    assert X.entries[0, 0].real == pytest.approx(root, abs=1e-8)

    def objective(x):
        return loss_Q("hellinger", dirac(0.5), WeightedEnsemble(tuple(values), weights), x)

    found = optimize.minimize_scalar(objective, bounds=(1.0, 4.0), method="bounded", options={"xatol": 1e-10})
    assert X.entries[0, 0].real == pytest.approx(found.x, abs=1e-5)


@pytest.mark.parametrize(
    "mu", [dirac(0.5), dirac(0.3), power_measure(0.5)], ids=["dirac-half", "dirac-0.3", "power-half"]
)
def test_hellinger_stationarity(mu, ensemble):
    X, report = hellinger_barycenter(mu, ensemble)
    assert report.converged
    assert stationarity_residual(mu, ensemble, X).norm <= 1e-8


def test_hellinger_passes_perturbation_check(ensemble):
    mu = dirac(0.5)
    X, _ = hellinger_barycenter(mu, ensemble)
    assert perturbation_check("hellinger", mu, ensemble, X, count=50).passed


def test_hellinger_single_matrix(spd_pair):
    A, _ = spd_pair
    X, _ = hellinger_barycenter(dirac(0.4), WeightedEnsemble((A,), np.array([1.0])))
    np.testing.assert_allclose(X.entries, A.entries, atol=1e-9)


# ---------------------------------------------------------------------------
# Symmetric-mean barycenter
# ---------------------------------------------------------------------------

def test_ka_geometric_matches_closed_form(ensemble):
    X, report = ka_barycenter(geometric(0.5), ensemble)
    assert report.converged
    expected = geometric_barycenter_closed_form(ensemble)
    np.testing.assert_allclose(X.entries, expected.entries, atol=1e-8)


def test_geometric_closed_form_solves_riccati(ensemble):
    X = geometric_barycenter_closed_form(ensemble).entries
    inverse_sum = sum(w * inv for w, inv in zip(ensemble.weights, ensemble.inverses))
    np.testing.assert_allclose(X @ inverse_sum @ X, ensemble.arithmetic_mean().entries, atol=1e-10)


@pytest.mark.parametrize(
    "sigma", [heinz(0.25), logarithmic(), ah_geometric(0.5)], ids=lambda s: s.name
)
def test_ka_two_point_is_the_mean(sigma, spd_pair):
    A, B = spd_pair
    X, report = ka_barycenter(sigma, WeightedEnsemble.uniform([A, B]))
    assert report.converged
    np.testing.assert_allclose(X.entries, mean(sigma, A, B).entries, atol=1e-8)


def test_ka_residual_vanishes(ensemble):
    sigma = heinz(0.3)
    X, report = ka_barycenter(sigma, ensemble)
    assert report.converged
    assert ka_residual(sigma, ensemble, X).norm <= 1e-10 * (1 + np.linalg.norm(np.linalg.inv(X.entries)))


def test_ka_residual_is_zero_at_closed_form(ensemble):
    X = geometric_barycenter_closed_form(ensemble)
    R = ka_residual(geometric(0.5), ensemble, X)
    assert R.norm <= 1e-9 * (1 + np.linalg.norm(np.linalg.inv(X.entries)))


def test_hellinger_residual_is_small_at_solution(ensemble):
    mu = dirac(0.5)
    X, _ = hellinger_barycenter(mu, ensemble, TIGHT)
    assert stationarity_residual(mu, ensemble, X).norm <= 1e-9


@pytest.mark.parametrize(
    "sigma", [geometric(0.5), heinz(0.25), logarithmic(), ah_geometric(0.5)], ids=lambda s: s.name
)
def test_ka_newton_converges_in_few_steps(sigma, ensemble):
    X, report = ka_barycenter(sigma, ensemble)
    assert report.converged
    assert report.iterations <= 50
    assert report.residual_history[-1] < report.residual_history[0]


@pytest.mark.parametrize("alpha", [0.25, 0.75])
def test_ka_weighted_two_point_is_ah_geometric(alpha, spd_pair):
    A, B = spd_pair
    E = WeightedEnsemble((A, B), np.array([1.0 - alpha, alpha]))
    expected = mean(ah_geometric(alpha), A, B)
    np.testing.assert_allclose(geometric_barycenter_closed_form(E).entries, expected.entries, atol=1e-10)
    X, report = ka_barycenter(geometric(0.5), E)
    assert report.converged
    np.testing.assert_allclose(X.entries, expected.entries, atol=1e-8)


def test_ka_accepts_power_density_mean():
    sigma = measure_mean(power_measure(0.5))
    assert sigma.has_full_range
    X, report = ka_barycenter(sigma, WeightedEnsemble.uniform([1.0, 4.0]))
    assert report.converged
    assert X.entries[0, 0].real == pytest.approx(2.0, rel=1e-6)


def test_ka_residual_with_small_relative_eigenvalues():
    # the ah-geometric start puts relative eigenvalues near 0.003
    E = WeightedEnsemble.uniform([np.diag([1.0, 1e5]), np.diag([1e5, 1.0])])
    X0 = geometric_barycenter_closed_form(E)
    R = ka_residual(logarithmic(), E, X0)
    assert np.all(np.isfinite(R.entries))
    assert R.norm > 0


def test_ka_single_matrix(spd_pair):
    A, _ = spd_pair
    X, _ = ka_barycenter(geometric(0.5), WeightedEnsemble((A,), np.array([1.0])))
    np.testing.assert_allclose(X.entries, A.entries, atol=1e-10)


def test_ka_rejects_asymmetric_mean(ensemble):
    with pytest.raises(DomainError):
        ka_barycenter(arithmetic(0.25), ensemble)


@pytest.mark.parametrize("sigma", [arithmetic(0.5), normalized_parallel_sum()], ids=lambda s: s.name)
def test_ka_rejects_restricted_range(sigma, ensemble):
    with pytest.raises(RangeRestrictionError):
        ka_barycenter(sigma, ensemble)


def test_ka_geometric_gradient():
    A, B = random_spd(3, 10.0, 11), random_spd(3, 10.0, 12)
    E = WeightedEnsemble.uniform([A, B])
    X = random_spd(3, 5.0, 13)
    G = loss_gradient("sigma", geometric(0.5), E, X).entries
    X_inv = np.linalg.inv(X.entries)
    expected = sum(w * (np.linalg.inv(M.entries) - X_inv @ M.entries @ X_inv) for w, M in zip(E.weights, E.matrices))
    np.testing.assert_allclose(G, expected, atol=1e-9)


# ---------------------------------------------------------------------------
# Losses, gradients and oracles
# ---------------------------------------------------------------------------

@pytest.mark.parametrize(
    "kind, params", [("rtm", None), ("bw", None), ("hellinger", dirac(0.5)), ("sigma", geometric(0.5))]
)
def test_loss_vanishes_at_single_matrix(kind, params, spd_pair):
    A, _ = spd_pair
    E = WeightedEnsemble((A,), np.array([1.0]))
    assert loss_Q(kind, params, E, A) == pytest.approx(0.0, abs=1e-10)


def test_rtm_loss_of_scalars():
    E = WeightedEnsemble.uniform([1.0, math.e ** 2])
    assert loss_Q("rtm", None, E, math.e) == pytest.approx(1.0)
    assert loss_Q("rtm", None, E, math.e) == pytest.approx(
        0.5 * d_rtm(1.0, math.e) ** 2 + 0.5 * d_rtm(math.e ** 2, math.e) ** 2
    )


@pytest.mark.parametrize(
    "kind, params",
    [("rtm", None), ("bw", None), ("hellinger", power_measure(0.5)), ("sigma", heinz(0.25))],
)
def test_gradient_matches_finite_differences(kind, params, ensemble):
    X = random_spd(3, 5.0, 99)
    assert gradient_check(kind, params, ensemble, X) <= 1e-5


@pytest.mark.parametrize("kind", ["rtm", "bw"])
def test_gradient_vanishes_at_barycenter(kind, ensemble):
    X, _ = solve(kind, None, ensemble, TIGHT)
    assert loss_gradient(kind, None, ensemble, X).norm <= 1e-8


@pytest.mark.parametrize("kind, params", [("rtm", None), ("bw", None), ("hellinger", dirac(0.5))])
def test_direct_minimization_agrees(kind, params, make_ensemble):
    E = make_ensemble(7, size=3, dim=2, complex_entries=False)
    X, _ = solve(kind, params, E, TIGHT)
    oracle = direct_minimize(kind, params, E)
    np.testing.assert_allclose(oracle.entries, X.entries, atol=1e-6)


def test_direct_minimization_agrees_for_sigma(make_ensemble):
    E = make_ensemble(7, size=3, dim=2, complex_entries=False)
    oracle = direct_minimize("sigma", geometric(0.5), E)
    np.testing.assert_allclose(oracle.entries, geometric_barycenter_closed_form(E).entries, atol=1e-5)


@pytest.mark.parametrize("sigma", [geometric(0.5), heinz(0.25)], ids=lambda s: s.name)
def test_sigma_barycenter_passes_perturbation_check(sigma, ensemble):
    X, _ = ka_barycenter(sigma, ensemble, TIGHT)
    result = perturbation_check("sigma", sigma, ensemble, X, count=50, seed=5)
    assert result.passed, result.min_gap
    assert result.min_gap > 0


def test_loss_rejects_unknown_kind(ensemble):
    with pytest.raises(ValueError):
        loss_Q("wasserstein", None, ensemble, ensemble.arithmetic_mean())


# ---------------------------------------------------------------------------
# Reports and dispatch
# ---------------------------------------------------------------------------

def test_non_convergence_is_reported(make_ensemble):
    E = make_ensemble(21, size=4, dim=3, condition=100.0)
    X, report = karcher_mean(E, SolverConfig(max_iter=1))
    assert isinstance(report, SolverReport)
    assert not report.converged
    assert report.iterations == 1
    assert len(report.residual_history) == 2
    assert "not converged" in report.message


def test_report_json_is_deterministic(ensemble):
    _, report = bw_barycenter(ensemble)
    data = report.to_json()
    assert "wall_time" not in data
    assert set(data) >= {"kind", "converged", "iterations", "final_residual", "residual_history", "objective"}
    assert data["kind"] == "bw"


def test_cross_check_records_disagreement(ensemble):
    _, report = karcher_mean(ensemble, SolverConfig(cross_check=True))
    assert report.init_disagreement is not None
    assert report.init_disagreement <= 1e-8


def test_explicit_initial_point(ensemble):
    start = ensemble.matrices[0]
    X, report = bw_barycenter(ensemble, SolverConfig(init=start))
    reference, _ = bw_barycenter(ensemble)
    assert report.converged
    np.testing.assert_allclose(X.entries, reference.entries, atol=1e-8)


def test_solve_dispatches(ensemble):
    X, report = solve("sigma", geometric(0.5), ensemble)
    assert report.kind == "sigma"
    np.testing.assert_allclose(X.entries, geometric_barycenter_closed_form(ensemble).entries, atol=1e-8)
    with pytest.raises(ValueError):
        solve("median", None, ensemble)
