"""Weighted barycenters of positive-definite matrices.

Four notions, each certified by the residual of its characterizing equation:

  rtm        Karcher equation sum w_j log(X^{1/2} A_j^{-1} X^{1/2}) = 0
  bw         X = sum w_j (X^{1/2} A_j X^{1/2})^{1/2}
  hellinger  X = (1/c) sum w_j integral l |(1-l) A_j^{-1} X^{1/2} + l X^{-1/2}|^{-2} d mu(l)
  sigma      sum w_j A_j^{-1/2} g'(A_j^{-1/2} X A_j^{-1/2}) A_j^{-1/2} = 0

The first three are solved by damped fixed-point iteration, the last by
damped Newton. Non-convergence is reported, never raised.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import linalg, optimize
from scipy.sparse.linalg import LinearOperator, cg

from opmeans.config import (
    CG_MAX_ITER,
    CG_RTOL,
    DAMPING_FLOOR,
    DEGENERATE_INTERIOR_MASS,
    GRADIENT_DIRECTIONS,
    GRADIENT_STEP,
    INIT_AH_GEOMETRIC,
    INIT_ARITHMETIC,
    INIT_DISAGREEMENT_TOL,
    INIT_HARMONIC,
    INIT_KINDS,
    KIND_BW,
    KIND_HELLINGER,
    KIND_RTM,
    KIND_SIGMA,
    LOSS_KINDS,
    PERTURBATION_COUNT,
    PERTURBATION_EPS,
    SOLVER_DAMPING,
    SOLVER_MAX_ITER,
    SOLVER_TOL,
    WEIGHT_TOL,
)
from opmeans.divergences import SigmaPotential, d_bw, d_rtm, phi_mu, phi_sigma
from opmeans.errors import (
    DegenerateMeasureError,
    DomainError,
    NotPositiveDefiniteError,
    NumericalError,
    RangeRestrictionError,
)
from opmeans.hermitian import (
    HermitianMatrix,
    MatrixLike,
    SpdMatrix,
    as_spd,
    divided_differences,
    expm,
    hermitian_part,
    hs_inner,
    invm,
    invsqrtm,
    logm,
    random_hermitian,
    sandwich,
    sqrtm,
)
from opmeans.kubo_ando import MeanDescriptor, geometric_mean
from opmeans.measures import GeneratorMeasure

log = logging.getLogger(__name__)

LossParams = Union[None, GeneratorMeasure, MeanDescriptor, SigmaPotential]

# Raised by trial points outside the feasible set of a line search
_INFEASIBLE = (NotPositiveDefiniteError, RangeRestrictionError, NumericalError)


# ---------------------------------------------------------------------------
# Inputs, configuration, reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    """
    SPD matrices A_1..A_m of one dimension with positive weights summing to 1.
    """

    matrices: tuple
    weights: np.ndarray

    def __post_init__(self):
        matrices = tuple(as_spd(A) for A in self.matrices)
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if not matrices:
            raise DomainError("Ensemble needs at least one matrix")
        if len(matrices) != weights.size:
            raise DomainError(f"{len(matrices)} matrices but {weights.size} weights")
        if len({A.dim for A in matrices}) != 1:
            raise DomainError("Ensemble matrices must share one dimension")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise DomainError("Ensemble weights must be strictly positive")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise DomainError(f"Ensemble weights sum to {weights.sum():.15g}, not 1")
        weights.setflags(write=False)
        object.__setattr__(self, "matrices", matrices)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, matrices: Sequence[MatrixLike]) -> "WeightedEnsemble":
        matrices = list(matrices)
        return cls(tuple(matrices), np.full(len(matrices), 1.0 / len(matrices)))

    @property
    def dim(self) -> int:
        return self.matrices[0].dim

    @property
    def size(self) -> int:
        return len(self.matrices)

    @cached_property
    def inverses(self) -> tuple:
        return tuple(invm(A).entries for A in self.matrices)

    @cached_property
    def inverse_roots(self) -> tuple:
        return tuple(invsqrtm(A).entries for A in self.matrices)

    def arithmetic_mean(self) -> SpdMatrix:
        return SpdMatrix(sum(w * A.entries for w, A in zip(self.weights, self.matrices)))

    def harmonic_mean(self) -> SpdMatrix:
        return invm(sum(w * inv for w, inv in zip(self.weights, self.inverses)))

    def permuted(self, order: Sequence[int]) -> "WeightedEnsemble":
        return WeightedEnsemble(tuple(self.matrices[i] for i in order), self.weights[list(order)])

    def congruent(self, C: np.ndarray) -> "WeightedEnsemble":
        return WeightedEnsemble(tuple(sandwich(C, A.entries) for A in self.matrices), self.weights)


@dataclass(frozen=True)
class SolverConfig:
    tol: float = SOLVER_TOL
    """
    Relative residual threshold
    """
    max_iter: int = SOLVER_MAX_ITER
    damping: float = SOLVER_DAMPING
    """
    Initial step size in (0, 1]; halved whenever a step increases the residual
    """
    damping_floor: float = DAMPING_FLOOR
    init: Union[str, SpdMatrix] = INIT_ARITHMETIC
    """
    One of INIT_KINDS or an explicit starting matrix
    """
    cross_check: bool = False
    """
    Rerun from a second initialization and record the disagreement
    """

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping must lie in (0, 1], got {self.damping}")
        if not 0 < self.damping_floor <= self.damping:
            raise ValueError(f"damping_floor must lie in (0, damping], got {self.damping_floor}")
        if isinstance(self.init, str) and self.init not in INIT_KINDS:
            raise ValueError(f"Unknown init {self.init!r}; expected one of {', '.join(INIT_KINDS)}")

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SolverReport:
    kind: str
    converged: bool
    iterations: int
    residual_history: list
    objective_value: float = math.nan
    wall_time: float = 0.0
    init_disagreement: Optional[float] = None
    message: str = ""
    perturbation: Optional[dict] = None
    """
    {"passed", "min_gap"} of a perturbation check, when one was run
    """

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def to_json(self) -> dict:
        """Deterministic fields only; wall time stays out of the file."""
        data = {
            "kind": self.kind,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "residual_history": list(self.residual_history),
            "objective": self.objective_value,
        }
        if self.init_disagreement is not None:
            data["init_disagreement"] = self.init_disagreement
        if self.perturbation is not None:
            data["perturbation"] = dict(self.perturbation)
        if self.message:
            data["message"] = self.message
        return data


def initial_point(E: WeightedEnsemble, init: Union[str, MatrixLike]) -> SpdMatrix:
    if not isinstance(init, str):
        X = as_spd(init)
        if X.dim != E.dim:
            raise DomainError(f"Initial matrix has dim {X.dim}, ensemble has dim {E.dim}")
        return X
    if init == INIT_ARITHMETIC:
        return E.arithmetic_mean()
    if init == INIT_HARMONIC:
        return E.harmonic_mean()
    if init == INIT_AH_GEOMETRIC:
        return geometric_barycenter_closed_form(E)
    raise ValueError(f"Unknown init {init!r}")


# ---------------------------------------------------------------------------
# Damped fixed-point driver
# ---------------------------------------------------------------------------

def _damped_fixed_point(
    kind: str,
    X0: SpdMatrix,
    evaluate: Callable[[SpdMatrix], tuple],
    combine: Callable[[SpdMatrix, object, float], SpdMatrix],
    cfg: SolverConfig,
):
    """Iterate X <- combine(X, target(X), theta) until the residual is below tol (1 + ||X||).

    `evaluate(X)` returns (target, residual norm). The damping theta halves
    whenever a step increases the residual, down to cfg.damping_floor.
    """
    X = X0
    target, residual = evaluate(X)
    history = [residual]
    theta = cfg.damping
    iterations = 0

    while residual > cfg.tol * (1.0 + X.norm) and iterations < cfg.max_iter:
        iterations += 1
        candidate = combine(X, target, theta)
        candidate_target, candidate_residual = evaluate(candidate)
        while candidate_residual > residual and theta > cfg.damping_floor:
            theta = max(theta / 2.0, cfg.damping_floor)
            log.debug("%s: residual increased, damping reduced to %.4f", kind, theta)
            candidate = combine(X, target, theta)
            candidate_target, candidate_residual = evaluate(candidate)
        if candidate_residual > residual:
            log.warning("%s: residual increased at the damping floor (iteration %d)", kind, iterations)
        X, target, residual = candidate, candidate_target, candidate_residual
        history.append(residual)
        log.debug("%s iteration %d: residual %.3e, damping %.4f", kind, iterations, residual, theta)

    converged = residual <= cfg.tol * (1.0 + X.norm)
    return X, converged, iterations, history


def _solve_with(
    kind: str,
    params: LossParams,
    E: WeightedEnsemble,
    cfg: Optional[SolverConfig],
    iterate: Callable[[SpdMatrix, SolverConfig], tuple],
) -> tuple[SpdMatrix, SolverReport]:
    cfg = cfg or SolverConfig()
    started = time.perf_counter()
    X, converged, iterations, history = iterate(initial_point(E, cfg.init), cfg)

    report = SolverReport(
        kind=kind,
        converged=converged,
        iterations=iterations,
        residual_history=[float(r) for r in history],
        objective_value=loss_Q(kind, params, E, X),
    )
    if converged:
        log.info("%s converged in %d iterations, residual %.3e", kind, iterations, report.final_residual)
    else:
        report.message = f"not converged after {iterations} iterations"
        log.warning("%s did not converge: residual %.3e after %d iterations",
                    kind, report.final_residual, iterations)

    if cfg.cross_check and isinstance(cfg.init, str):
        alternative = INIT_ARITHMETIC if cfg.init == INIT_HARMONIC else INIT_HARMONIC
        other, *_ = iterate(initial_point(E, alternative), cfg)
        disagreement = float(np.linalg.norm(X.entries - other.entries) / (1.0 + X.norm))
        report.init_disagreement = disagreement
        if disagreement > INIT_DISAGREEMENT_TOL:
            report.message = (report.message + "; " if report.message else "") + (
                f"{cfg.init} and {alternative} initializations disagree by {disagreement:.3e}"
            )
            log.warning("%s: initializations %s and %s disagree by %.3e",
                        kind, cfg.init, alternative, disagreement)

    report.wall_time = time.perf_counter() - started
    return X, report


# ---------------------------------------------------------------------------
# Riemannian trace metric (Karcher mean)
# ---------------------------------------------------------------------------

def karcher_residual(E: WeightedEnsemble, X: MatrixLike) -> HermitianMatrix:
    """sum w_j log(X^{1/2} A_j^{-1} X^{1/2})."""
    root = sqrtm(X).entries
    return HermitianMatrix(sum(
        w * logm(sandwich(root, inv)).entries for w, inv in zip(E.weights, E.inverses)
    ))


def karcher_mean(E: WeightedEnsemble, cfg: Optional[SolverConfig] = None):
    """RTM barycenter via X <- X^{1/2} exp(-theta S(X)) X^{1/2}.

    Returns:
        (X, SolverReport)
    """
    def evaluate(X):
        root = sqrtm(X).entries
        S = HermitianMatrix(sum(
            w * logm(sandwich(root, inv)).entries for w, inv in zip(E.weights, E.inverses)
        ))
        return (root, S), S.norm

    def combine(X, target, theta):
        root, S = target
        return SpdMatrix(sandwich(root, expm(-theta * S).entries))

    return _solve_with(KIND_RTM, None, E, cfg,
                       lambda X0, c: _damped_fixed_point(KIND_RTM, X0, evaluate, combine, c))


# ---------------------------------------------------------------------------
# Bures-Wasserstein
# ---------------------------------------------------------------------------

def bw_fixed_point_map(E: WeightedEnsemble, X: MatrixLike) -> SpdMatrix:
    """sum w_j (X^{1/2} A_j X^{1/2})^{1/2}."""
    root = sqrtm(X).entries
    return SpdMatrix(sum(
        w * sqrtm(sandwich(root, A.entries)).entries for w, A in zip(E.weights, E.matrices)
    ))


def bw_barycenter(E: WeightedEnsemble, cfg: Optional[SolverConfig] = None):
    """Bures-Wasserstein barycenter by damped Picard iteration.

    Returns:
        (X, SolverReport)
    """
    def evaluate(X):
        target = bw_fixed_point_map(E, X)
        return target, float(np.linalg.norm(X.entries - target.entries))

    def combine(X, target, theta):
        return SpdMatrix((1.0 - theta) * X.entries + theta * target.entries)

    return _solve_with(KIND_BW, None, E, cfg,
                       lambda X0, c: _damped_fixed_point(KIND_BW, X0, evaluate, combine, c))


# ---------------------------------------------------------------------------
# Generalized quantum Hellinger
# ---------------------------------------------------------------------------

def check_hellinger_measure(mu: GeneratorMeasure) -> None:
    """
    Raises:
        DegenerateMeasureError: if c(mu) = 0 or mu lives on {0, 1}, where the
            objective is constant in X.
    """
    if mu.barycenter <= DEGENERATE_INTERIOR_MASS:
        raise DegenerateMeasureError("zero-barycenter", "Measure has c(mu) = 0; the fixed point divides by c")
    if mu.interior_mass <= DEGENERATE_INTERIOR_MASS:
        raise DegenerateMeasureError(
            "endpoint-supported",
            "Measure is supported on {0, 1}; the divergence vanishes identically "
            "and every X is a minimizer",
        )


def _positive_part(mu: GeneratorMeasure) -> tuple[np.ndarray, np.ndarray]:
    lam = mu.locations
    keep = lam > 0
    return lam[keep], mu.masses[keep]


def _inverse_gram_sum(lam: np.ndarray, mass: np.ndarray, factors: np.ndarray) -> np.ndarray:
    # sum_k mass_k lam_k (F_k* F_k)^{-1} for a stack of factors F_k
    gram = np.conj(np.swapaxes(factors, -1, -2)) @ factors
    return np.einsum("k,kij->ij", mass * lam, np.linalg.inv(gram))


def stationarity_residual(mu: GeneratorMeasure, E: WeightedEnsemble, X: MatrixLike) -> HermitianMatrix:
    """c I - sum w_j integral l |(1-l) A_j^{-1} X + l I|^{-2} d mu(l).

    This is also the Euclidean gradient of sum w_j phi_mu(A_j, X).
    """
    X = as_spd(X)
    lam, mass = _positive_part(mu)
    n = X.dim
    total = np.zeros((n, n), dtype=complex)
    for w, inv in zip(E.weights, E.inverses):
        factors = (1.0 - lam)[:, None, None] * (inv @ X.entries)[None] + lam[:, None, None] * np.eye(n)[None]
        total += w * _inverse_gram_sum(lam, mass, factors)
    return HermitianMatrix(hermitian_part(mu.barycenter * np.eye(n) - total))


def hellinger_fixed_point_map(mu: GeneratorMeasure, E: WeightedEnsemble, X: MatrixLike) -> SpdMatrix:
    """(1/c) sum w_j integral l |(1-l) A_j^{-1} X^{1/2} + l X^{-1/2}|^{-2} d mu(l)."""
    X = as_spd(X)
    root, inv_root = sqrtm(X).entries, invsqrtm(X).entries
    lam, mass = _positive_part(mu)
    n = X.dim
    total = np.zeros((n, n), dtype=complex)
    for w, inv in zip(E.weights, E.inverses):
        factors = (1.0 - lam)[:, None, None] * (inv @ root)[None] + lam[:, None, None] * inv_root[None]
        total += w * _inverse_gram_sum(lam, mass, factors)
    return SpdMatrix(hermitian_part(total) / mu.barycenter)


def hellinger_barycenter(mu: GeneratorMeasure, E: WeightedEnsemble, cfg: Optional[SolverConfig] = None):
    """Minimizer of sum w_j phi_mu(A_j, X) by damped Picard iteration.

    Raises:
        DegenerateMeasureError: see `check_hellinger_measure`.

    Returns:
        (X, SolverReport)
    """
    check_hellinger_measure(mu)

    def evaluate(X):
        target = hellinger_fixed_point_map(mu, E, X)
        return target, float(np.linalg.norm(X.entries - target.entries))

    def combine(X, target, theta):
        return SpdMatrix((1.0 - theta) * X.entries + theta * target.entries)

    return _solve_with(KIND_HELLINGER, mu, E, cfg,
                       lambda X0, c: _damped_fixed_point(KIND_HELLINGER, X0, evaluate, combine, c))


# ---------------------------------------------------------------------------
# Symmetric Kubo-Ando means
# ---------------------------------------------------------------------------

def check_sigma_descriptor(sigma: MeanDescriptor) -> None:
    """
    Raises:
        DomainError: if sigma is not symmetric.
        RangeRestrictionError: if the generator is not onto (0, inf).
    """
    if not sigma.is_symmetric():
        raise DomainError(f"{sigma.name} is not a symmetric mean")
    if not sigma.has_full_range:
        low, high = sigma.value_range
        raise RangeRestrictionError(
            (low, high),
            f"{sigma.name} has generator range ({low:g}, {high:g}), not (0, inf); the loss is "
            f"then finite only on a shifted cone (for the arithmetic mean and scalars 1, 6 it "
            f"is infinite for every X <= 3), so the barycenter is not characterized",
        )


def ka_residual(sigma: MeanDescriptor, E: WeightedEnsemble, X: MatrixLike) -> HermitianMatrix:
    """sum w_j A_j^{-1/2} (I - f^{-1}(A_j^{-1/2} X A_j^{-1/2})^{-1}) A_j^{-1/2}.

    Raises:
        DomainError: if some A_j^{-1/2} X A_j^{-1/2} has spectrum outside the range of f.
        NumericalError: if f^{-1} underflows on that spectrum.
    """
    X = as_spd(X)
    total = np.zeros((X.dim, X.dim), dtype=complex)
    for w, inv_root in zip(E.weights, E.inverse_roots):
        whitened = SpdMatrix(sandwich(inv_root, X.entries))
        lam = whitened.eig.eigenvalues
        preimage = np.atleast_1d(sigma.f_inverse(lam))
        if np.any(preimage <= 0.0):
            raise NumericalError(
                f"{sigma.name}: f^-1 underflows at relative eigenvalue {float(lam[np.argmin(preimage)]):.3e}"
            )
        total += w * sandwich(inv_root, whitened.eig.apply(1.0 - 1.0 / preimage))
    return HermitianMatrix(hermitian_part(total))


def _to_real_vector(H: np.ndarray) -> np.ndarray:
    return np.concatenate([H.real.ravel(), H.imag.ravel()])


def _from_real_vector(v: np.ndarray, n: int) -> np.ndarray:
    H = v[: n * n].reshape(n, n) + 1j * v[n * n:].reshape(n, n)
    return (H + H.conj().T) / 2.0


def _newton_direction(potential: SigmaPotential, E: WeightedEnsemble, X: SpdMatrix, R: HermitianMatrix) -> np.ndarray:
    """Solve J[D] = -R, J the Frechet derivative of the residual, by conjugate gradients."""
    n = X.dim
    blocks = []
    for w, inv_root in zip(E.weights, E.inverse_roots):
        whitened = SpdMatrix(sandwich(inv_root, X.entries))
        lam, vectors = whitened.eig.eigenvalues, whitened.eig.vectors
        kernel = divided_differences(lam, potential.g_prime(lam), potential.g_second(lam))
        blocks.append((w, inv_root, vectors, kernel))

    def apply(D: np.ndarray) -> np.ndarray:
        out = np.zeros((n, n), dtype=complex)
        for w, inv_root, vectors, kernel in blocks:
            inner = vectors.conj().T @ sandwich(inv_root, D) @ vectors
            out += w * sandwich(inv_root, vectors @ (kernel * inner) @ vectors.conj().T)
        return out

    operator = LinearOperator(
        (2 * n * n, 2 * n * n),
        matvec=lambda v: _to_real_vector(apply(_from_real_vector(v, n))),
        dtype=float,
    )
    solution, info = cg(operator, -_to_real_vector(R.entries), rtol=CG_RTOL, atol=0.0, maxiter=CG_MAX_ITER)
    if info != 0:
        log.debug("sigma: conjugate gradients stopped early (info=%d)", info)
    return _from_real_vector(solution, n)


def _sigma_loss(potential: SigmaPotential, E: WeightedEnsemble, X: SpdMatrix) -> float:
    return float(sum(w * phi_sigma(potential, A, X) for w, A in zip(E.weights, E.matrices)))


def _descent_step(potential: SigmaPotential, E: WeightedEnsemble, X: SpdMatrix, R: HermitianMatrix):
    """Armijo backtracking along -R on the loss; None if no decrease was found."""
    current = _sigma_loss(potential, E, X)
    slope = R.norm ** 2
    step = X.norm / R.norm
    for _ in range(60):
        try:
            candidate = SpdMatrix(X.entries - step * R.entries)
            if _sigma_loss(potential, E, candidate) <= current - 1e-4 * step * slope:
                return candidate, ka_residual(potential.descriptor, E, candidate)
        except _INFEASIBLE:
            pass
        step /= 2.0
    return None


def _ka_iterate(sigma: MeanDescriptor, E: WeightedEnsemble, X0: SpdMatrix, cfg: SolverConfig):
    potential = SigmaPotential(sigma)
    X = X0
    R = ka_residual(sigma, E, X)
    history = [R.norm]
    iterations = 0

    def threshold(X):
        return cfg.tol * (1.0 + invm(X).norm)

    while R.norm > threshold(X) and iterations < cfg.max_iter:
        iterations += 1
        direction = _newton_direction(potential, E, X, R)
        accepted = None
        theta = cfg.damping
        while True:
            try:
                candidate = SpdMatrix(X.entries + theta * direction)
                candidate_residual = ka_residual(sigma, E, candidate)
                if candidate_residual.norm < R.norm:
                    accepted = (candidate, candidate_residual)
                    break
            except _INFEASIBLE:
                pass
            if theta <= cfg.damping_floor:
                break
            theta = max(theta / 2.0, cfg.damping_floor)

        if accepted is None:
            log.warning("sigma: Newton step did not reduce the residual at iteration %d; "
                        "falling back to steepest descent", iterations)
            accepted = _descent_step(potential, E, X, R)
            if accepted is None:
                log.warning("sigma: descent step found no decrease; stopping")
                break
        X, R = accepted
        history.append(R.norm)
        log.debug("sigma iteration %d: residual %.3e, step %.4f", iterations, R.norm, theta)

    return X, R.norm <= threshold(X), iterations, history


def ka_barycenter(sigma: MeanDescriptor, E: WeightedEnsemble, cfg: Optional[SolverConfig] = None):
    """Minimizer of sum w_j phi_sigma(A_j, X) for a symmetric full-range mean.

    Raises:
        DomainError: if sigma is not symmetric.
        RangeRestrictionError: if the generator range is not (0, inf).

    Returns:
        (X, SolverReport)
    """
    check_sigma_descriptor(sigma)
    return _solve_with(KIND_SIGMA, sigma, E, cfg, lambda X0, c: _ka_iterate(sigma, E, X0, c))


def geometric_barycenter_closed_form(E: WeightedEnsemble) -> SpdMatrix:
    """H # A with H, A the weighted harmonic and arithmetic means.

    Solves X (sum w_j A_j^{-1}) X = sum w_j A_j.
    """
    return geometric_mean(E.harmonic_mean(), E.arithmetic_mean())


# ---------------------------------------------------------------------------
# Losses, gradients and optimality oracles
# ---------------------------------------------------------------------------

def _measure_param(params: LossParams) -> GeneratorMeasure:
    if isinstance(params, GeneratorMeasure):
        return params
    if isinstance(params, MeanDescriptor) and params.measure is not None:
        return params.measure
    raise ValueError("hellinger loss needs a GeneratorMeasure")


def _potential_param(params: LossParams) -> SigmaPotential:
    if isinstance(params, SigmaPotential):
        return params
    if isinstance(params, MeanDescriptor):
        return SigmaPotential(params)
    raise ValueError("sigma loss needs a MeanDescriptor or SigmaPotential")


def _check_kind(kind: str) -> None:
    if kind not in LOSS_KINDS:
        raise ValueError(f"Unknown loss kind {kind!r}; expected one of {', '.join(LOSS_KINDS)}")


def loss_Q(kind: str, params: LossParams, E: WeightedEnsemble, X: MatrixLike) -> float:
    """Weighted objective whose minimizer is the barycenter of `kind`.

    Returns `math.inf` for the sigma kind when X is infeasible.
    """
    _check_kind(kind)
    X = as_spd(X)
    pairs = zip(E.weights, E.matrices)
    if kind == KIND_RTM:
        return float(sum(w * d_rtm(A, X) ** 2 for w, A in pairs))
    if kind == KIND_BW:
        return float(sum(w * d_bw(A, X) ** 2 for w, A in pairs))
    if kind == KIND_HELLINGER:
        mu = _measure_param(params)
        return float(sum(w * phi_mu(mu, A, X) for w, A in pairs))
    return _sigma_loss(_potential_param(params), E, X)


def loss_gradient(kind: str, params: LossParams, E: WeightedEnsemble, X: MatrixLike) -> HermitianMatrix:
    """Euclidean gradient G of loss_Q, so that DQ(X)[Y] = tr(G Y)."""
    _check_kind(kind)
    X = as_spd(X)
    if kind == KIND_RTM:
        inv_root = invsqrtm(X).entries
        return HermitianMatrix(2.0 * sandwich(inv_root, karcher_residual(E, X).entries))
    if kind == KIND_BW:
        inv_root = invsqrtm(X).entries
        return HermitianMatrix(sandwich(inv_root, X.entries - bw_fixed_point_map(E, X).entries))
    if kind == KIND_HELLINGER:
        return stationarity_residual(_measure_param(params), E, X)
    return ka_residual(_potential_param(params).descriptor, E, X)


def directional_derivatives(
    kind: str,
    params: LossParams,
    E: WeightedEnsemble,
    X: MatrixLike,
    step: float = GRADIENT_STEP,
    directions: int = GRADIENT_DIRECTIONS,
    seed=0,
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic tr(G Y) and central differences of loss_Q along random Y with ||Y|| = ||X||."""
    X = as_spd(X)
    if isinstance(params, MeanDescriptor) and kind == KIND_SIGMA:
        params = SigmaPotential(params)
    gradient = loss_gradient(kind, params, E, X)
    rng = np.random.default_rng(seed)
    analytic, numeric = [], []
    for _ in range(directions):
        Y = random_hermitian(X.dim, rng, complex_entries=not X.is_real()).entries * X.norm
        analytic.append(hs_inner(gradient, Y))
        upper = loss_Q(kind, params, E, X.entries + step * Y)
        lower = loss_Q(kind, params, E, X.entries - step * Y)
        numeric.append((upper - lower) / (2.0 * step))
    return np.array(analytic), np.array(numeric)


def gradient_check(
    kind: str,
    params: LossParams,
    E: WeightedEnsemble,
    X: MatrixLike,
    step: float = GRADIENT_STEP,
    directions: int = GRADIENT_DIRECTIONS,
    seed=0,
) -> float:
    """Worst relative error between analytic and finite-difference directional derivatives."""
    analytic, numeric = directional_derivatives(kind, params, E, X, step, directions, seed)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), np.finfo(float).tiny)
    return float(np.max(np.abs(analytic - numeric) / scale))


@dataclass(frozen=True)
class PerturbationResult:
    passed: bool
    min_gap: float
    """
    Smallest Q(perturbed) - Q(X); negative means a perturbation did better
    """
    objective: float


def perturbation_check(
    kind: str,
    params: LossParams,
    E: WeightedEnsemble,
    X: MatrixLike,
    count: int = PERTURBATION_COUNT,
    eps: float = PERTURBATION_EPS,
    seed=0,
    tol: float = 1e-12,
) -> PerturbationResult:
    """Compare loss_Q at X with loss_Q at X^{1/2} exp(eps H) X^{1/2} for random unit H."""
    X = as_spd(X)
    if isinstance(params, MeanDescriptor) and kind == KIND_SIGMA:
        params = SigmaPotential(params)
    objective = loss_Q(kind, params, E, X)
    root = sqrtm(X).entries
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(count):
        H = random_hermitian(X.dim, rng, complex_entries=not X.is_real())
        perturbed = SpdMatrix(sandwich(root, expm(eps * H).entries))
        gaps.append(loss_Q(kind, params, E, perturbed) - objective)
    min_gap = float(min(gaps))
    return PerturbationResult(min_gap >= -tol * (1.0 + abs(objective)), min_gap, objective)


def direct_minimize(
    kind: str,
    params: LossParams,
    E: WeightedEnsemble,
    init: Optional[MatrixLike] = None,
    max_iter: int = 2000,
) -> SpdMatrix:
    """Independent oracle: L-BFGS-B on the Cholesky factor L of X = L L*."""
    _check_kind(kind)
    if isinstance(params, MeanDescriptor) and kind == KIND_SIGMA:
        params = SigmaPotential(params)
    X0 = as_spd(init) if init is not None else E.arithmetic_mean()
    n = X0.dim
    rows, cols = np.tril_indices(n)
    complex_entries = not (X0.is_real() and all(A.is_real() for A in E.matrices))

    def unpack(v: np.ndarray) -> np.ndarray:
        L = np.zeros((n, n), dtype=complex)
        k = rows.size
        L[rows, cols] = v[:k] + (1j * v[k:] if complex_entries else 0.0)
        return L

    def pack(L: np.ndarray) -> np.ndarray:
        parts = [L[rows, cols].real]
        if complex_entries:
            parts.append(L[rows, cols].imag)
        return np.concatenate(parts)

    def objective(v: np.ndarray):
        L = unpack(v)
        try:
            X = SpdMatrix(hermitian_part(L @ L.conj().T))
            value = loss_Q(kind, params, E, X)
        except _INFEASIBLE:
            return math.inf, np.zeros_like(v)
        if not math.isfinite(value):
            return math.inf, np.zeros_like(v)
        gradient = 2.0 * (loss_gradient(kind, params, E, X).entries @ L)
        return value, pack(gradient)

    start = pack(linalg.cholesky(X0.entries, lower=True))
    result = optimize.minimize(
        objective,
        start,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": 1e-13, "ftol": 1e-16},
    )
    if not result.success:
        log.info("direct minimization of %s stopped: %s", kind, result.message)
    L = unpack(result.x)
    return SpdMatrix(hermitian_part(L @ L.conj().T))


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------

def solve(kind: str, params: LossParams, E: WeightedEnsemble, cfg: Optional[SolverConfig] = None):
    """Run the barycenter solver for `kind` ("rtm", "bw", "hellinger", "sigma")."""
    _check_kind(kind)
    if kind == KIND_RTM:
        return karcher_mean(E, cfg)
    if kind == KIND_BW:
        return bw_barycenter(E, cfg)
    if kind == KIND_HELLINGER:
        return hellinger_barycenter(_measure_param(params), E, cfg)
    if isinstance(params, SigmaPotential):
        params = params.descriptor
    if not isinstance(params, MeanDescriptor):
        raise ValueError("sigma barycenter needs a MeanDescriptor")
    return ka_barycenter(params, E, cfg)
