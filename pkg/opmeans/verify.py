"""Named invariant suites run by `opmeans verify`.

Each suite draws random inputs from one seeded generator and raises
`VerificationFailure` with a JSON-serializable dump on the first failed
check. A passing suite returns a short summary.
"""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from opmeans.barycenters import (
    SolverConfig,
    WeightedEnsemble,
    bw_barycenter,
    geometric_barycenter_closed_form,
    gradient_check,
    hellinger_barycenter,
    ka_barycenter,
    karcher_mean,
    perturbation_check,
    stationarity_residual,
)
from opmeans.config import KIND_BW, KIND_HELLINGER, KIND_RTM, KIND_SIGMA, LOEWNER_TOL, PERTURBATION_COUNT
from opmeans.errors import VerificationFailure
from opmeans.formats import matrix_to_json, measure_to_json
from opmeans.hermitian import (
    HermitianMatrix,
    SpdMatrix,
    congruence,
    identity,
    loewner_leq,
    random_spd,
    sandwich,
)
from opmeans.kubo_ando import (
    MeanDescriptor,
    adjoint,
    ah_geometric,
    arithmetic,
    geometric,
    geometric_mean,
    harmonic,
    heinz,
    logarithmic,
    mean,
    measure_mean,
    normalized_parallel_sum,
    transpose,
)
from opmeans.measures import GeneratorMeasure, convex_order_leq, dirac, discrete, power_measure

log = logging.getLogger(__name__)

_WEIGHTS = (0.25, 0.5, 0.75)
_GRID = np.linspace(0.1, 10.0, 100)


def axiom_means() -> list[MeanDescriptor]:
    means = []
    for value in _WEIGHTS:
        means += [arithmetic(value), geometric(value), harmonic(value), ah_geometric(value)]
    means.append(normalized_parallel_sum())
    return means


def _fail(suite: str, check: str, **dump) -> None:
    payload = {"suite": suite, "check": check}
    for key, value in dump.items():
        if isinstance(value, HermitianMatrix):
            value = matrix_to_json(value)
        elif isinstance(value, GeneratorMeasure):
            value = measure_to_json(value)
        elif isinstance(value, np.ndarray):
            value = value.tolist()
        payload[key] = value
    raise VerificationFailure(suite, payload, f"{suite}: {check} failed")


def _close(X: HermitianMatrix, Y: HermitianMatrix, tol: float) -> bool:
    return float(np.linalg.norm(X.entries - Y.entries)) <= tol * (1.0 + X.norm)


def _dim(rng: np.random.Generator) -> int:
    return int(rng.integers(2, 6))


def _hermitian_invertible(dim: int, rng: np.random.Generator) -> np.ndarray:
    sample = random_spd(dim, 4.0, rng)
    signs = rng.choice([-1.0, 1.0], size=dim)
    return sample.eig.apply(signs * sample.eigenvalues)


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def suite_ka_axioms(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    for sigma in axiom_means():
        for _ in range(trials):
            dim = _dim(rng)
            A, B = random_spd(dim, 10.0, rng), random_spd(dim, 10.0, rng)
            A_up = SpdMatrix(A.entries + 0.5 * random_spd(dim, 10.0, rng).entries)
            B_up = SpdMatrix(B.entries + 0.5 * random_spd(dim, 10.0, rng).entries)
            if not loewner_leq(mean(sigma, A, B), mean(sigma, A_up, B_up), LOEWNER_TOL):
                _fail("ka-axioms", "monotonicity", mean=sigma.name, A=A, B=B, A_up=A_up, B_up=B_up)

            C = _hermitian_invertible(dim, rng)
            left = congruence(C, mean(sigma, A, B))
            right = mean(sigma, congruence(C, A), congruence(C, B))
            if not loewner_leq(left, right, LOEWNER_TOL):
                _fail("ka-axioms", "transformer inequality", mean=sigma.name, A=A, B=B,
                      C=HermitianMatrix(C))
            checks += 2
        if not _close(mean(sigma, identity(3), identity(3)), identity(3), 1e-12):
            _fail("ka-axioms", "normalization", mean=sigma.name)
        checks += 1
    return checks


def suite_generators(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    for sigma in axiom_means():
        f = sigma.f(_GRID)
        for name, image in (("adjoint", adjoint(adjoint(sigma))), ("transpose", transpose(transpose(sigma)))):
            if not np.allclose(image.f(_GRID), f, rtol=1e-10, atol=0.0):
                _fail("generators", f"{name} involution", mean=sigma.name)
        if abs(transpose(sigma).weight - (1.0 - sigma.weight)) > 1e-10:
            _fail("generators", "transpose weight", mean=sigma.name)
        checks += 3

    for p in _WEIGHTS:
        if not np.allclose(transpose(geometric(p)).f(_GRID), geometric(1.0 - p).f(_GRID), rtol=1e-10, atol=0.0):
            _fail("generators", "transpose of geometric", p=p)
        checks += 1
    if not transpose(geometric(0.5)).is_symmetric():
        _fail("generators", "geometric mean symmetry")

    for p in (0.3, 0.5, 0.7):
        mu = power_measure(p)
        if not np.allclose(measure_mean(mu).f(_GRID), _GRID ** p, rtol=0.0, atol=1e-6):
            _fail("generators", "power measure", p=p)
        checks += 1
    return checks


def random_discrete_measure(rng: np.random.Generator, atoms: int = 4) -> GeneratorMeasure:
    locations = rng.uniform(0.05, 0.95, size=atoms)
    return discrete(locations, rng.dirichlet(np.ones(atoms)))


def mean_preserving_spread(mu: GeneratorMeasure, rng: np.random.Generator) -> GeneratorMeasure:
    """Split each atom l into l -/+ d with half the mass; the result dominates mu."""
    lam, mass = mu.atom_locations, mu.atom_masses
    spread = rng.uniform(0.0, 1.0, size=lam.size) * np.minimum(lam, 1.0 - lam)
    return discrete(np.concatenate([lam - spread, lam + spread]), np.concatenate([mass, mass]) / 2.0)


def suite_convex_order(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    for _ in range(trials):
        mu = random_discrete_measure(rng)
        nu = mean_preserving_spread(mu, rng)
        if not convex_order_leq(mu, nu):
            _fail("convex-order", "spread dominance", mu=mu, nu=nu)
        sigma_mu, sigma_nu = measure_mean(mu), measure_mean(nu)
        c = mu.barycenter
        for _ in range(4):
            dim = _dim(rng)
            A, B = random_spd(dim, 10.0, rng), random_spd(dim, 10.0, rng)
            middle = mean(sigma_mu, A, B)
            if not loewner_leq(middle, mean(sigma_nu, A, B)):
                _fail("convex-order", "mean monotonicity", mu=mu, nu=nu, A=A, B=B)
            if not (loewner_leq(mean(harmonic(c), A, B), middle) and loewner_leq(middle, mean(arithmetic(c), A, B))):
                _fail("convex-order", "harmonic-arithmetic bracket", mu=mu, A=A, B=B)
            checks += 2
    return checks


def _pair_ensemble(rng: np.random.Generator, t: float = 0.5):
    dim = _dim(rng)
    A, B = random_spd(dim, 10.0, rng), random_spd(dim, 10.0, rng)
    return A, B, WeightedEnsemble((A, B), np.array([1.0 - t, t]))


def _ensemble(rng: np.random.Generator, size: int = 3, dim: int = 3) -> WeightedEnsemble:
    return WeightedEnsemble(tuple(random_spd(dim, 10.0, rng) for _ in range(size)), rng.dirichlet(np.ones(size)))


def suite_karcher(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    for _ in range(trials):
        A, B, E = _pair_ensemble(rng)
        X, report = karcher_mean(E)
        if not report.converged or not _close(X, geometric_mean(A, B), 1e-8):
            _fail("karcher", "two-point midpoint", A=A, B=B, X=X)
        E3 = _ensemble(rng)
        C = random_spd(3, 4.0, rng).entries
        X3, _ = karcher_mean(E3)
        Y3, _ = karcher_mean(E3.congruent(C))
        if not _close(Y3, HermitianMatrix(sandwich(C, X3.entries)), 1e-8):
            _fail("karcher", "congruence equivariance", X=X3, Y=Y3)
        checks += 2
    return checks


def suite_bw(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    for _ in range(trials):
        scalars = rng.uniform(0.5, 10.0, size=3)
        weights = rng.dirichlet(np.ones(3))
        E = WeightedEnsemble(tuple(SpdMatrix(a) for a in scalars), weights)
        X, _ = bw_barycenter(E, SolverConfig(tol=1e-14))
        expected = float(weights @ np.sqrt(scalars)) ** 2
        if abs(X.trace - expected) > 1e-12 * (1.0 + expected):
            _fail("bw", "scalar closed form", scalars=scalars, weights=weights)
        for t in _WEIGHTS:
            _, _, E2 = _pair_ensemble(rng, t)
            X2, report = bw_barycenter(E2)
            result = perturbation_check(KIND_BW, None, E2, X2, count=PERTURBATION_COUNT, seed=rng)
            if not report.converged or not result.passed:
                _fail("bw", "two-point optimality", t=t, X=X2, min_gap=result.min_gap)
        checks += 4
    return checks


def suite_hellinger(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    measures = [dirac(0.25), dirac(0.5), dirac(0.75), power_measure(0.5)]
    for _ in range(trials):
        E = _ensemble(rng)
        for mu in measures:
            X, report = hellinger_barycenter(mu, E)
            if not report.converged or stationarity_residual(mu, E, X).norm > 1e-8:
                _fail("hellinger", "stationarity", mu=mu, X=X)
            if not perturbation_check(KIND_HELLINGER, mu, E, X, count=PERTURBATION_COUNT, seed=rng).passed:
                _fail("hellinger", "optimality", mu=mu, X=X)
            checks += 2
    return checks


def suite_sigma(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    sharp = geometric(0.5)
    for _ in range(trials):
        E = _ensemble(rng)
        X, report = ka_barycenter(sharp, E)
        if not report.converged or not _close(X, geometric_barycenter_closed_form(E), 1e-8):
            _fail("sigma", "geometric closed form", X=X)
        A, B, E2 = _pair_ensemble(rng)
        for sigma in (heinz(0.25), logarithmic()):
            X2, report2 = ka_barycenter(sigma, E2)
            if not report2.converged or not _close(X2, mean(sigma, A, B), 1e-8):
                _fail("sigma", "two-point mean", mean=sigma.name, A=A, B=B, X=X2)
        alpha = float(rng.choice(_WEIGHTS))
        A, B, E3 = _pair_ensemble(rng, alpha)
        X3, report3 = ka_barycenter(sharp, E3)
        if not report3.converged or not _close(X3, mean(ah_geometric(alpha), A, B), 1e-8):
            _fail("sigma", "weighted two-point closed form", alpha=alpha, A=A, B=B, X=X3)
        checks += 4
    return checks


def suite_gradients(rng: np.random.Generator, trials: int) -> int:
    checks = 0
    cases = [(KIND_RTM, None), (KIND_BW, None), (KIND_HELLINGER, power_measure(0.5)), (KIND_SIGMA, geometric(0.5))]
    for _ in range(trials):
        E = _ensemble(rng)
        X = random_spd(3, 10.0, rng)
        for kind, params in cases:
            error = gradient_check(kind, params, E, X, seed=rng)
            if error > 1e-5:
                _fail("gradients", "finite differences", kind=kind, X=X, error=error)
            checks += 1
    return checks


SUITES: dict[str, tuple[Callable[[np.random.Generator, int], int], int]] = {
    "ka-axioms": (suite_ka_axioms, 100),
    "generators": (suite_generators, 1),
    "convex-order": (suite_convex_order, 50),
    "karcher": (suite_karcher, 50),
    "bw": (suite_bw, 5),
    "hellinger": (suite_hellinger, 2),
    "sigma": (suite_sigma, 10),
    "gradients": (suite_gradients, 10),
}


def run_suite(name: str, seed: int = 0, trials: int | None = None) -> dict:
    """Run one suite; raises VerificationFailure on the first counterexample."""
    if name not in SUITES:
        raise KeyError(name)
    suite, default_trials = SUITES[name]
    rng = np.random.default_rng(seed)
    checks = suite(rng, trials or default_trials)
    log.info("suite %s passed %d checks (seed %d)", name, checks, seed)
    return {"suite": name, "seed": seed, "checks": checks, "passed": True}
