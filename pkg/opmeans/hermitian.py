"""Dense Hermitian linear algebra for positive-definite matrix means.

Every matrix function goes through a full eigendecomposition (no Schur/Pade
variants). Values are immutable: entries are symmetrized and frozen on
construction, and the eigendecomposition is computed once per value.

Norms are Hilbert-Schmidt (Frobenius) norms unless stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np
from scipy import linalg

from opmeans.config import (
    ASYMMETRY_TOL,
    EPS_PD,
    LOEWNER_TOL,
)
from opmeans.errors import (
    AsymmetryError,
    DomainError,
    EigenSolverError,
    NotPositiveDefiniteError,
    SingularMatrixError,
)

MatrixLike = Union["HermitianMatrix", np.ndarray, list, float]
Seed = Union[int, np.random.Generator, np.random.SeedSequence, None]


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Spectral decomposition X = Q diag(eigenvalues) Q*"""

    eigenvalues: np.ndarray
    """
    Real eigenvalues in ascending order
    """
    vectors: np.ndarray
    """
    Unitary matrix whose columns are the eigenvectors
    """

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Return Q diag(values) Q* as a dense, exactly Hermitian array."""
        return hermitian_part((self.vectors * values) @ self.vectors.conj().T)

    def reconstruct(self) -> np.ndarray:
        return self.apply(self.eigenvalues)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """
    Dense complex Hermitian matrix.

    Inputs are symmetrized to (X + X*)/2. Asymmetry above
    ASYMMETRY_TOL * ||X|| raises `AsymmetryError`, below it is repaired.
    Library code passes computed arrays through `hermitian_part` first, so
    the check only ever fires on user input.
    Scalars are accepted as 1x1 matrices.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise DomainError(f"Expected a non-empty square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Matrix entries must be finite")

        scale = np.linalg.norm(arr)
        asymmetry = np.linalg.norm(arr - arr.conj().T) / 2
        if asymmetry > ASYMMETRY_TOL * scale:
            relative = asymmetry / scale if scale else float("inf")
            raise AsymmetryError(
                relative,
                f"Matrix is not Hermitian: relative asymmetry {relative:.3e} "
                f"exceeds {ASYMMETRY_TOL:.0e}",
            )

        arr = (arr + arr.conj().T) / 2
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def eig(self) -> EigenDecomposition:
        return eigen_decompose(self)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eig.eigenvalues

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def norm(self) -> float:
        """Hilbert-Schmidt norm"""
        return float(np.linalg.norm(self.entries))

    def is_real(self) -> bool:
        return bool(np.all(self.entries.imag == 0))

    def __add__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.entries + as_hermitian(other).entries)

    def __sub__(self, other: "HermitianMatrix") -> "HermitianMatrix":
        return HermitianMatrix(self.entries - as_hermitian(other).entries)

    def __neg__(self) -> "HermitianMatrix":
        return HermitianMatrix(-self.entries)

    def __mul__(self, scalar: float) -> "HermitianMatrix":
        if not np.isreal(scalar):
            raise DomainError("Hermitian matrices scale by real numbers only")
        return HermitianMatrix(float(np.real(scalar)) * self.entries)

    __rmul__ = __mul__

    def __matmul__(self, other) -> np.ndarray:
        right = other.entries if isinstance(other, HermitianMatrix) else np.asarray(other)
        return self.entries @ right


@dataclass(frozen=True, eq=False)
class SpdMatrix(HermitianMatrix):
    """
    Hermitian positive-definite matrix.

    Rejects min(eigenvalue) <= EPS_PD * max(eigenvalue).
    """

    def __post_init__(self):
        super().__post_init__()
        lam = self.eigenvalues
        lam_min, lam_max = float(lam[0]), float(lam[-1])
        if lam_max <= 0 or lam_min <= EPS_PD * lam_max:
            raise NotPositiveDefiniteError(
                lam_min,
                lam_max,
                f"Matrix is not positive definite: eigenvalues span "
                f"[{lam_min:.3e}, {lam_max:.3e}]",
            )


def as_hermitian(X: MatrixLike) -> HermitianMatrix:
    if isinstance(X, HermitianMatrix):
        return X
    return HermitianMatrix(X)


def as_spd(X: MatrixLike) -> SpdMatrix:
    if isinstance(X, SpdMatrix):
        return X
    if isinstance(X, HermitianMatrix):
        return SpdMatrix(X.entries)
    return SpdMatrix(X)


def identity(dim: int) -> SpdMatrix:
    return SpdMatrix(np.eye(dim))


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """(a + a*)/2 on a raw array; the result is exactly Hermitian in floating point."""
    return (a + a.conj().T) / 2


def sandwich(C: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Hermitian part of C X C* on raw arrays (X Hermitian), no invertibility check."""
    return hermitian_part(C @ X @ C.conj().T)


def hs_inner(X: MatrixLike, Y: MatrixLike) -> float:
    """Real trace inner product tr(XY) of Hermitian matrices."""
    x = X.entries if isinstance(X, HermitianMatrix) else np.asarray(X)
    y = Y.entries if isinstance(Y, HermitianMatrix) else np.asarray(Y)
    return float(np.vdot(x, y).real)


# ---------------------------------------------------------------------------
# Spectral calculus
# ---------------------------------------------------------------------------

def eigen_decompose(X: MatrixLike) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Raises:
        EigenSolverError: if the LAPACK driver fails to converge.
    """
    X = as_hermitian(X)
    try:
        eigenvalues, vectors = linalg.eigh(X.entries)
    except (linalg.LinAlgError, ValueError) as err:
        raise EigenSolverError(
            f"eigh failed on a {X.dim}x{X.dim} matrix with norm {X.norm:.3e}: {err}"
        ) from err
    return EigenDecomposition(eigenvalues, vectors)


def matrix_function(X: MatrixLike, phi: Callable[[np.ndarray], np.ndarray]) -> HermitianMatrix:
    """Apply a scalar function through the spectral theorem: Q phi(L) Q*.

    Args:
        X: Hermitian (usually positive-definite) matrix.
        phi: Vectorized real function, evaluated on the eigenvalue array.

    Raises:
        DomainError: naming the first eigenvalue where phi is not finite.
    """
    X = as_hermitian(X)
    eig = X.eig
    with np.errstate(all="ignore"):
        values = np.asarray(phi(eig.eigenvalues), dtype=float)
    values = np.broadcast_to(values, eig.eigenvalues.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        lam = float(eig.eigenvalues[np.argmax(bad)])
        raise DomainError(f"Matrix function is undefined at eigenvalue {lam:.6e}")
    return HermitianMatrix(eig.apply(values))


def divided_differences(eigenvalues: np.ndarray, values: np.ndarray, derivatives: np.ndarray) -> np.ndarray:
    """First divided differences of a spectral function (Daleckii-Krein kernel).

    The Frechet derivative of X -> phi(X) at X = Q diag(eigenvalues) Q* in
    direction E is Q (Gamma * (Q* E Q)) Q*, where Gamma is returned here.
    Coincident eigenvalues use the mean of the two derivatives.
    """
    gap = eigenvalues[:, None] - eigenvalues[None, :]
    close = np.abs(gap) <= 1e-10 * np.maximum(1.0, np.abs(eigenvalues)[:, None])
    slope = (values[:, None] - values[None, :]) / np.where(close, 1.0, gap)
    return np.where(close, (derivatives[:, None] + derivatives[None, :]) / 2.0, slope)


def sqrtm(X: MatrixLike) -> SpdMatrix:
    return SpdMatrix(matrix_function(as_spd(X), np.sqrt).entries)


def invsqrtm(X: MatrixLike) -> SpdMatrix:
    return SpdMatrix(matrix_function(as_spd(X), lambda lam: 1.0 / np.sqrt(lam)).entries)


def invm(X: MatrixLike) -> SpdMatrix:
    return SpdMatrix(matrix_function(as_spd(X), lambda lam: 1.0 / lam).entries)


def logm(X: MatrixLike) -> HermitianMatrix:
    return matrix_function(as_spd(X), np.log)


def expm(X: MatrixLike) -> SpdMatrix:
    return SpdMatrix(matrix_function(X, np.exp).entries)


def powm(X: MatrixLike, p: float) -> HermitianMatrix:
    """X^p for SPD X; positive-definite result for p in [0, 1]."""
    result = matrix_function(as_spd(X), lambda lam: lam ** p)
    if 0.0 <= p <= 1.0:
        return SpdMatrix(result.entries)
    return result


# ---------------------------------------------------------------------------
# Congruence, absolute value, Loewner order
# ---------------------------------------------------------------------------

def congruence(C: MatrixLike, X: MatrixLike) -> HermitianMatrix:
    """C X C* for an invertible C; positive-definite inputs stay positive-definite."""
    c = C.entries if isinstance(C, HermitianMatrix) else np.asarray(C, dtype=complex)
    X = as_hermitian(X)
    if c.ndim != 2 or c.shape != X.entries.shape:
        raise DomainError(f"Congruence factor shape {c.shape} does not match {X.entries.shape}")
    singular_values = linalg.svdvals(c)
    if singular_values[-1] <= EPS_PD * singular_values[0]:
        raise SingularMatrixError(
            f"Congruence factor is singular: smallest singular value {singular_values[-1]:.3e}"
        )
    result = sandwich(c, X.entries)
    if isinstance(X, SpdMatrix):
        return SpdMatrix(result)
    return HermitianMatrix(result)


def operator_abs(Z: MatrixLike) -> HermitianMatrix:
    """Operator absolute value |Z| = (Z*Z)^{1/2}, computed from the SVD of Z."""
    z = Z.entries if isinstance(Z, HermitianMatrix) else np.atleast_2d(np.asarray(Z, dtype=complex))
    _, s, vh = linalg.svd(z)
    result = hermitian_part((vh.conj().T * s) @ vh)
    if s[-1] > EPS_PD * s[0]:
        return SpdMatrix(result)
    return HermitianMatrix(result)


def loewner_leq(X: MatrixLike, Y: MatrixLike, tol: float = LOEWNER_TOL) -> bool:
    """X <= Y in the Loewner order, up to tol * (1 + ||Y - X||)."""
    X, Y = as_hermitian(X), as_hermitian(Y)
    if X.dim != Y.dim:
        raise DomainError(f"Dimension mismatch: {X.dim} vs {Y.dim}")
    gap = Y.entries - X.entries
    lam_min = linalg.eigvalsh(gap)[0]
    return bool(lam_min >= -tol * (1.0 + np.linalg.norm(gap)))


# ---------------------------------------------------------------------------
# Reproducible random samples
# ---------------------------------------------------------------------------

def _random_unitary(rng: np.random.Generator, dim: int, complex_entries: bool) -> np.ndarray:
    gauss = rng.standard_normal((dim, dim))
    if complex_entries:
        gauss = gauss + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(gauss)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_spd(
    dim: int,
    condition_target: float = 10.0,
    seed: Seed = None,
    complex_entries: bool = True,
) -> SpdMatrix:
    """Random SPD matrix with eigenvalues log-uniform in [1/condition_target, 1].

    For dim >= 2 the extreme eigenvalues are pinned at 1/condition_target and 1,
    so the condition number equals condition_target. Deterministic for a fixed seed.
    """
    if dim < 1:
        raise DomainError(f"dim must be >= 1, got {dim}")
    if condition_target < 1:
        raise DomainError(f"condition_target must be >= 1, got {condition_target}")

    rng = np.random.default_rng(seed)
    if dim == 1:
        eigenvalues = np.ones(1)
    else:
        log_kappa = np.log(condition_target)
        inner = rng.uniform(-log_kappa, 0.0, size=dim - 2)
        eigenvalues = np.exp(np.sort(np.concatenate([[-log_kappa], inner, [0.0]])))
    q = _random_unitary(rng, dim, complex_entries)
    return SpdMatrix(hermitian_part((q * eigenvalues) @ q.conj().T))


def random_hermitian(dim: int, seed: Seed = None, complex_entries: bool = True) -> HermitianMatrix:
    """Random Hermitian direction with unit Hilbert-Schmidt norm."""
    rng = np.random.default_rng(seed)
    gauss = rng.standard_normal((dim, dim))
    if complex_entries:
        gauss = gauss + 1j * rng.standard_normal((dim, dim))
    herm = (gauss + gauss.conj().T) / 2
    return HermitianMatrix(herm / np.linalg.norm(herm))


def random_invertible(dim: int, seed: Seed = None, complex_entries: bool = True) -> np.ndarray:
    """Random invertible matrix with singular values in [1/2, 2]."""
    rng = np.random.default_rng(seed)
    left = _random_unitary(rng, dim, complex_entries)
    right = _random_unitary(rng, dim, complex_entries)
    singular_values = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=dim))
    return (left * singular_values) @ right
