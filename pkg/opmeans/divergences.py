"""Distances, divergences and geodesics on positive-definite matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg

from opmeans.config import (
    BW_RADICAND_TOL,
    G_SIGMA_ABS_TOL,
    G_SIGMA_REL_TOL,
    INVERSE_CACHE_SIZE,
)
from opmeans.errors import DomainError, NumericalError
from opmeans.hermitian import (
    HermitianMatrix,
    MatrixLike,
    SpdMatrix,
    as_spd,
    hermitian_part,
    invsqrtm,
    matrix_function,
    sandwich,
    sqrtm,
)
from opmeans.kubo_ando import MeanDescriptor, connect
from opmeans.measures import GeneratorMeasure, eval_f

_LOG_ROUNDOFF = 8 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class GeodesicPoint:
    t: float
    value: HermitianMatrix


def _check_t(t: float) -> float:
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"Curve parameter t must lie in [0, 1], got {t}")
    return float(t)


def _pair(A: MatrixLike, B: MatrixLike) -> tuple[SpdMatrix, SpdMatrix]:
    A, B = as_spd(A), as_spd(B)
    if A.dim != B.dim:
        raise DomainError(f"Dimension mismatch: {A.dim} vs {B.dim}")
    return A, B


def relative_spectrum(A: MatrixLike, B: MatrixLike) -> np.ndarray:
    """Eigenvalues of A^{-1/2} B A^{-1/2}, from the pencil (B, A)."""
    A, B = _pair(A, B)
    return linalg.eigh(B.entries, A.entries, eigvals_only=True)


# ---------------------------------------------------------------------------
# Riemannian trace metric
# ---------------------------------------------------------------------------

def d_rtm(A: MatrixLike, B: MatrixLike) -> float:
    """||log(A^{-1/2} B A^{-1/2})||_2; exactly 0 when A and B coincide."""
    A, B = _pair(A, B)
    if np.array_equal(A.entries, B.entries):
        return 0.0
    logs = np.log(relative_spectrum(A, B))
    # pencil eigenvalues of nearly equal inputs land a few ulps away from 1
    logs[np.abs(logs) <= _LOG_ROUNDOFF] = 0.0
    return float(np.sqrt(np.sum(logs ** 2)))


def _relative_power_curve(A: SpdMatrix, B: SpdMatrix, phi) -> np.ndarray:
    inner = SpdMatrix(sandwich(invsqrtm(A).entries, B.entries))
    return sandwich(sqrtm(A).entries, matrix_function(inner, phi).entries)


def rtm_geodesic(A: MatrixLike, B: MatrixLike, t: float) -> GeodesicPoint:
    """A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}."""
    t = _check_t(t)
    A, B = _pair(A, B)
    return GeodesicPoint(t, SpdMatrix(_relative_power_curve(A, B, lambda lam: lam ** t)))


def rtm_velocity(A: MatrixLike, B: MatrixLike, t: float) -> HermitianMatrix:
    """Derivative of the RTM geodesic: A^{1/2} M^t log(M) A^{1/2}."""
    t = _check_t(t)
    A, B = _pair(A, B)
    return HermitianMatrix(_relative_power_curve(A, B, lambda lam: lam ** t * np.log(lam)))


# ---------------------------------------------------------------------------
# Bures-Wasserstein
# ---------------------------------------------------------------------------

def d_bw(A: MatrixLike, B: MatrixLike) -> float:
    """sqrt(tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2}).

    Raises:
        NumericalError: if the radicand is negative beyond roundoff.
    """
    A, B = _pair(A, B)
    if np.array_equal(A.entries, B.entries):
        return 0.0
    coupling = SpdMatrix(sandwich(sqrtm(A).entries, B.entries))
    fidelity = float(np.sum(np.sqrt(coupling.eigenvalues)))
    scale = A.trace + B.trace
    radicand = scale - 2.0 * fidelity
    if radicand < -BW_RADICAND_TOL * max(1.0, scale):
        raise NumericalError(f"Bures-Wasserstein radicand {radicand:.3e} is negative")
    return math.sqrt(max(radicand, 0.0))


def _cross_roots(A: SpdMatrix, B: SpdMatrix) -> np.ndarray:
    # (AB)^{1/2} + (BA)^{1/2} with (AB)^{1/2} = A^{1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}
    root_a = sqrtm(A).entries
    inv_root_a = invsqrtm(A).entries
    middle = sqrtm(sandwich(root_a, B.entries)).entries
    ab_root = root_a @ middle @ inv_root_a
    return ab_root + ab_root.conj().T


def bw_curve_verbatim(A: MatrixLike, B: MatrixLike, t: float) -> HermitianMatrix:
    """(1-t)^2 A^2 + t^2 B^2 + t(1-t) ((AB)^{1/2} + (BA)^{1/2}).

    The endpoints are A^2 and B^2.
    """
    t = _check_t(t)
    A, B = _pair(A, B)
    a, b = A.entries, B.entries
    value = (1 - t) ** 2 * (a @ a) + t ** 2 * (b @ b) + t * (1 - t) * _cross_roots(A, B)
    return HermitianMatrix(hermitian_part(value))


def bw_geodesic(A: MatrixLike, B: MatrixLike, t: float) -> GeodesicPoint:
    return GeodesicPoint(float(t), bw_curve_verbatim(A, B, t))


def bw_interpolant(A: MatrixLike, B: MatrixLike, t: float) -> SpdMatrix:
    """(1-t)^2 A + t^2 B + t(1-t) ((AB)^{1/2} + (BA)^{1/2}); runs from A to B."""
    t = _check_t(t)
    A, B = _pair(A, B)
    value = (1 - t) ** 2 * A.entries + t ** 2 * B.entries + t * (1 - t) * _cross_roots(A, B)
    return SpdMatrix(hermitian_part(value))


# ---------------------------------------------------------------------------
# Quantum Hellinger divergence of a generator measure
# ---------------------------------------------------------------------------

def phi_mu(mu: GeneratorMeasure, A: MatrixLike, B: MatrixLike) -> float:
    """tr((1 - c) A + c B - A sigma_mu B) with c = c(mu); nonnegative."""
    A, B = _pair(A, B)
    c = mu.barycenter
    connected = connect(lambda lam: eval_f(mu, lam), A, B)
    return (1.0 - c) * A.trace + c * B.trace - connected.trace


# ---------------------------------------------------------------------------
# Divergence of a symmetric mean
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SigmaPotential:
    """
    Convex potential g(x) = integral from 1 to x of (1 - 1/f^{-1}(t)) dt of a
    symmetric mean, defined on the range of its generator.
    """

    descriptor: MeanDescriptor

    def __post_init__(self):
        if not self.descriptor.is_symmetric():
            raise DomainError(f"{self.descriptor.name} is not a symmetric mean")
        object.__setattr__(self, "_g_cache", lru_cache(maxsize=INVERSE_CACHE_SIZE)(self._integrate))

    @property
    def domain(self) -> tuple[float, float]:
        return self.descriptor.value_range

    def contains(self, x) -> np.ndarray:
        return self.descriptor.in_range(x)

    def g_prime(self, x):
        return 1.0 - 1.0 / self.descriptor.f_inverse(x)

    def g_second(self, x):
        """(f^{-1})'(x) / f^{-1}(x)^2 = 1 / (f'(f^{-1}(x)) f^{-1}(x)^2)."""
        u = self.descriptor.f_inverse(x)
        return 1.0 / (self.descriptor.f_prime(u) * u ** 2)

    def g(self, x: float) -> float:
        """
        Raises:
            DomainError: if x lies outside the range of the generator.
        """
        if not bool(self.contains(x)):
            low, high = self.domain
            raise DomainError(f"g is defined on ({low:g}, {high:g}), got {x!r}")
        return self._g_cache(float(x))

    def _integrate(self, x: float) -> float:
        if x == 1.0:
            return 0.0
        value, _ = integrate.quad(
            lambda t: 1.0 - 1.0 / self.descriptor.f_inverse(t),
            1.0,
            x,
            epsabs=G_SIGMA_ABS_TOL,
            epsrel=G_SIGMA_REL_TOL,
            limit=200,
        )
        return float(value)


def g_sigma(P: SigmaPotential, x: float) -> float:
    return P.g(x)


def phi_sigma(P: SigmaPotential, A: MatrixLike, B: MatrixLike) -> float:
    """tr g(A^{-1/2} B A^{-1/2}), or `math.inf` when the spectrum leaves the range."""
    spectrum = relative_spectrum(A, B)
    if not np.all(P.contains(spectrum)):
        return math.inf
    return float(sum(P.g(lam) for lam in spectrum))
