"""Kubo-Ando means A sigma B = A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}.

A `MeanDescriptor` carries the generator f of a mean, either as a
`GeneratorMeasure` or as an explicit `Generator` (f, f', f^{-1} plus the
limits of f and of f(x)/x at 0 and infinity). The limits make adjoint and
transpose exact operations on descriptors, including the declared range
of f that the divergence code relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from opmeans.config import (
    GENERATOR_NORMALIZATION_TOL,
    INVERSE_CACHE_SIZE,
    INVERSE_RTOL,
    MASS_TOL,
    RANGE_MARGIN,
)
from opmeans.errors import DomainError, NumericalError, ParseError
from opmeans.hermitian import (
    MatrixLike,
    SpdMatrix,
    as_spd,
    invm,
    invsqrtm,
    matrix_function,
    sandwich,
    sqrtm,
)
from opmeans.measures import GeneratorMeasure, eval_f, eval_f_prime

ScalarFunction = Callable[[np.ndarray], np.ndarray]

_MONOTONICITY_GRID = np.geomspace(1e-3, 1e3, 61)
_SYMMETRY_GRID = np.geomspace(1e-2, 1e2, 41)
_LOG_TINY = math.log(np.finfo(float).tiny)
_LOG_HUGE = math.log(np.finfo(float).max)


def _reciprocal(value: float) -> float:
    if value == 0:
        return math.inf
    if math.isinf(value):
        return 0.0
    return 1.0 / value


@dataclass(frozen=True)
class Generator:
    """Explicit operator monotone generator."""

    f: ScalarFunction
    f_prime: ScalarFunction
    f_inverse: Optional[ScalarFunction] = None
    """
    Closed-form inverse on the range of f; `None` means invert numerically
    """
    value_range: tuple[float, float] = (0.0, math.inf)
    """
    (f(0+), f(inf))
    """
    slopes: tuple[float, float] = (math.inf, 0.0)
    """
    (lim f(x)/x as x -> 0+, lim f(x)/x as x -> inf)
    """


@dataclass(frozen=True, eq=False)
class MeanDescriptor:
    """
    A Kubo-Ando mean given by exactly one of a generator measure or an
    explicit generator.
    """

    name: str
    measure: Optional[GeneratorMeasure] = None
    generator: Optional[Generator] = None
    _inverse_cache: Callable[[float], float] = field(init=False, repr=False)

    def __post_init__(self):
        if (self.measure is None) == (self.generator is None):
            raise DomainError(f"{self.name}: give exactly one of a measure or a generator")
        object.__setattr__(self, "_inverse_cache", lru_cache(maxsize=INVERSE_CACHE_SIZE)(self._invert))

        tol = MASS_TOL if self.measure is not None else GENERATOR_NORMALIZATION_TOL
        at_one = float(self.f(1.0))
        if abs(at_one - 1.0) > tol:
            raise DomainError(f"{self.name}: generator is not normalized, f(1) = {at_one:.15g}")
        values = self.f(_MONOTONICITY_GRID)
        if not np.all(np.diff(values) > 0):
            raise DomainError(f"{self.name}: generator is not strictly increasing")

    # -- generator access -------------------------------------------------

    def f(self, x):
        if self.measure is not None:
            return eval_f(self.measure, x)
        return self.generator.f(x)

    def f_prime(self, x):
        if self.measure is not None:
            return eval_f_prime(self.measure, x)
        return self.generator.f_prime(x)

    def f_inverse(self, y):
        """f^{-1}(y) for y in the open range of f (scalar or array).

        Raises:
            DomainError: if some y lies outside the range of f.
            NumericalError: if a numeric inverse falls outside the double range.
        """
        arr = np.asarray(y, dtype=float)
        low, high = self.value_range
        if np.any(arr <= low) or np.any(arr >= high) or not np.all(np.isfinite(arr)):
            raise DomainError(
                f"{self.name}: value outside the range ({low:g}, {high:g}) of the generator"
            )
        if self.generator is not None and self.generator.f_inverse is not None:
            result = np.asarray(self.generator.f_inverse(arr), dtype=float)
        else:
            result = np.vectorize(self._inverse_cache, otypes=[float])(arr)
        if np.ndim(y) == 0:
            return float(result)
        return result

    def _invert(self, y: float) -> float:
        # Root in u = log x; f^-1 can be as small as exp(-1/y) (logarithmic mean)
        def residual(u: float) -> float:
            return float(self.f(math.exp(u))) - y

        center = math.log(y)
        low = self._bracket(residual, center, -1.0, _LOG_TINY, y)
        high = self._bracket(residual, center, 1.0, _LOG_HUGE, y)
        u = optimize.brentq(residual, low, high, xtol=INVERSE_RTOL, rtol=4 * np.finfo(float).eps)
        return math.exp(u)

    def _bracket(self, residual, center: float, direction: float, limit: float, y: float) -> float:
        """Exponential search from `center` until the residual changes sign."""
        step = 1.0
        while True:
            u = max(center - step, limit) if direction < 0 else min(center + step, limit)
            value = residual(u)
            if (value < 0) if direction < 0 else (value > 0):
                return u
            if u == limit:
                raise NumericalError(
                    f"{self.name}: could not bracket f^-1({y!r}) within the double range"
                )
            step *= 2.0

    # -- derived quantities -----------------------------------------------

    @property
    def value_range(self) -> tuple[float, float]:
        if self.measure is not None:
            return self.measure.value_range()
        return self.generator.value_range

    @property
    def slopes(self) -> tuple[float, float]:
        if self.measure is not None:
            return self.measure.slopes()
        return self.generator.slopes

    @property
    def weight(self) -> float:
        """W(sigma) = f'(1)."""
        if self.measure is not None:
            return self.measure.barycenter
        return float(self.f_prime(1.0))

    @property
    def has_full_range(self) -> bool:
        low, high = self.value_range
        return low <= 0.0 and math.isinf(high)

    def in_range(self, y) -> np.ndarray:
        low, high = self.value_range
        arr = np.asarray(y, dtype=float)
        return (arr > low + RANGE_MARGIN) & (arr < high - RANGE_MARGIN)

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        """f(x) = x f(1/x) on a sampled grid."""
        x = _SYMMETRY_GRID
        fx = self.f(x)
        return bool(np.all(np.abs(fx - x * self.f(1.0 / x)) <= tol * np.maximum(1.0, fx)))

    def as_generator(self) -> Generator:
        if self.generator is not None:
            return self.generator
        return Generator(
            f=self.f,
            f_prime=self.f_prime,
            f_inverse=self.f_inverse,
            value_range=self.value_range,
            slopes=self.slopes,
        )

    def __call__(self, A: MatrixLike, B: MatrixLike) -> SpdMatrix:
        return mean(self, A, B)


# ---------------------------------------------------------------------------
# Connections and means
# ---------------------------------------------------------------------------

def connect(f: ScalarFunction, A: MatrixLike, B: MatrixLike) -> SpdMatrix:
    """A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2} for any positive generator f."""
    A, B = as_spd(A), as_spd(B)
    if A.dim != B.dim:
        raise DomainError(f"Dimension mismatch: {A.dim} vs {B.dim}")
    root = sqrtm(A).entries
    inner = SpdMatrix(sandwich(invsqrtm(A).entries, B.entries))
    return SpdMatrix(sandwich(root, matrix_function(inner, f).entries))


def mean(sigma: MeanDescriptor, A: MatrixLike, B: MatrixLike) -> SpdMatrix:
    """A sigma B.

    Raises:
        DomainError: on dimension mismatch or when f is undefined on the
            spectrum of A^{-1/2} B A^{-1/2}.
    """
    return connect(sigma.f, A, B)


def geometric_mean(A: MatrixLike, B: MatrixLike, t: float = 0.5) -> SpdMatrix:
    """A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}."""
    return connect(lambda lam: lam ** t, A, B)


def parallel_sum(A: MatrixLike, B: MatrixLike) -> SpdMatrix:
    """A : B = (A^{-1} + B^{-1})^{-1}."""
    A, B = as_spd(A), as_spd(B)
    if A.dim != B.dim:
        raise DomainError(f"Dimension mismatch: {A.dim} vs {B.dim}")
    return invm(invm(A).entries + invm(B).entries)


def adjoint(sigma: MeanDescriptor) -> MeanDescriptor:
    """Mean generated by f*(x) = 1 / f(1/x)."""
    g = sigma.as_generator()

    def f_star(x):
        return 1.0 / g.f(1.0 / np.asarray(x, dtype=float))

    def f_star_prime(x):
        x = np.asarray(x, dtype=float)
        return g.f_prime(1.0 / x) / (x ** 2 * g.f(1.0 / x) ** 2)

    def f_star_inverse(y):
        return 1.0 / g.f_inverse(1.0 / np.asarray(y, dtype=float))

    low, high = g.value_range
    slope_zero, slope_infinity = g.slopes
    return MeanDescriptor(
        name=f"adjoint({sigma.name})",
        generator=Generator(
            f=f_star,
            f_prime=f_star_prime,
            f_inverse=f_star_inverse if g.f_inverse is not None else None,
            value_range=(_reciprocal(high), _reciprocal(low)),
            slopes=(_reciprocal(slope_infinity), _reciprocal(slope_zero)),
        ),
    )


def transpose(sigma: MeanDescriptor) -> MeanDescriptor:
    """Mean generated by x f(1/x), so that A sigma^T B = B sigma A."""
    if sigma.measure is not None:
        return MeanDescriptor(name=f"transpose({sigma.name})", measure=sigma.measure.reflect())

    g = sigma.generator

    def f_t(x):
        x = np.asarray(x, dtype=float)
        return x * g.f(1.0 / x)

    def f_t_prime(x):
        x = np.asarray(x, dtype=float)
        return g.f(1.0 / x) - g.f_prime(1.0 / x) / x

    low, high = g.value_range
    slope_zero, slope_infinity = g.slopes
    return MeanDescriptor(
        name=f"transpose({sigma.name})",
        generator=Generator(
            f=f_t,
            f_prime=f_t_prime,
            value_range=(slope_infinity, slope_zero),
            slopes=(high, low),
        ),
    )


# ---------------------------------------------------------------------------
# Named means
# ---------------------------------------------------------------------------

def _check_weight(name: str, value: float) -> float:
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name}: parameter must lie in (0, 1), got {value}")
    return float(value)


def arithmetic(lam: float = 0.5) -> MeanDescriptor:
    """Weighted arithmetic mean, f(x) = 1 - lam + lam x."""
    lam = _check_weight("arithmetic", lam)
    return MeanDescriptor(
        name=f"arithmetic:{lam:g}",
        generator=Generator(
            f=lambda x: (1.0 - lam) + lam * np.asarray(x, dtype=float),
            f_prime=lambda x: np.full_like(np.asarray(x, dtype=float), lam),
            f_inverse=lambda y: (np.asarray(y, dtype=float) - (1.0 - lam)) / lam,
            value_range=(1.0 - lam, math.inf),
            slopes=(math.inf, lam),
        ),
    )


def harmonic(lam: float = 0.5) -> MeanDescriptor:
    """Weighted harmonic mean, f(x) = x / ((1 - lam) x + lam)."""
    lam = _check_weight("harmonic", lam)

    def f(x):
        x = np.asarray(x, dtype=float)
        return x / ((1.0 - lam) * x + lam)

    def f_prime(x):
        x = np.asarray(x, dtype=float)
        return lam / ((1.0 - lam) * x + lam) ** 2

    def f_inverse(y):
        y = np.asarray(y, dtype=float)
        return lam * y / (1.0 - (1.0 - lam) * y)

    return MeanDescriptor(
        name=f"harmonic:{lam:g}",
        generator=Generator(f, f_prime, f_inverse, (0.0, 1.0 / (1.0 - lam)), (1.0 / lam, 0.0)),
    )


def geometric(p: float = 0.5) -> MeanDescriptor:
    """Weighted geometric mean, f(x) = x^p."""
    p = _check_weight("geometric", p)
    return MeanDescriptor(
        name=f"geometric:{p:g}",
        generator=Generator(
            f=lambda x: np.asarray(x, dtype=float) ** p,
            f_prime=lambda x: p * np.asarray(x, dtype=float) ** (p - 1.0),
            f_inverse=lambda y: np.asarray(y, dtype=float) ** (1.0 / p),
        ),
    )


def normalized_parallel_sum() -> MeanDescriptor:
    """2 (A : B), generator 2x / (x + 1)."""
    descriptor = harmonic(0.5)
    return MeanDescriptor(name="parallel-sum", generator=descriptor.generator)


def ah_geometric(alpha: float) -> MeanDescriptor:
    """(A !_alpha B) # (A nabla_alpha B), f(x) = sqrt(x (1 - a + a x) / ((1 - a) x + a))."""
    a = _check_weight("ah-geo", alpha)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(x * (1.0 - a + a * x) / ((1.0 - a) * x + a))

    def f_prime(x):
        x = np.asarray(x, dtype=float)
        arith = 1.0 - a + a * x
        harm_denom = (1.0 - a) * x + a
        # d/dx of the squared generator, divided by 2 f
        squared_prime = (arith + a * x) / harm_denom - x * arith * (1.0 - a) / harm_denom ** 2
        return squared_prime / (2.0 * f(x))

    def f_inverse(y):
        # positive root of a x^2 + (1 - a)(1 - y^2) x - a y^2 = 0
        y2 = np.asarray(y, dtype=float) ** 2
        b = (1.0 - a) * (1.0 - y2)
        root = np.sqrt(b ** 2 + 4.0 * a ** 2 * y2)
        return np.where(b >= 0, 2.0 * a * y2 / (b + root), (root - b) / (2.0 * a))

    return MeanDescriptor(name=f"ah-geo:{a:g}", generator=Generator(f, f_prime, f_inverse))


_LOG_SERIES_CUTOFF = 1e-2


def _logarithmic_f(x):
    x = np.asarray(x, dtype=float)
    d = x - 1.0
    near = np.abs(d) < _LOG_SERIES_CUTOFF
    safe_log = np.log(np.where(near, 2.0, x))
    series = 1.0 + d / 2.0 - d ** 2 / 12.0 + d ** 3 / 24.0 - 19.0 * d ** 4 / 720.0 + 3.0 * d ** 5 / 160.0
    return np.where(near, series, d / safe_log)


def _logarithmic_f_prime(x):
    x = np.asarray(x, dtype=float)
    d = x - 1.0
    near = np.abs(d) < _LOG_SERIES_CUTOFF
    safe_log = np.log(np.where(near, 2.0, x))
    safe_x = np.where(near, 2.0, x)
    direct = (safe_log - (safe_x - 1.0) / safe_x) / safe_log ** 2
    series = 0.5 - d / 6.0 + d ** 2 / 8.0 - 19.0 * d ** 3 / 180.0 + 3.0 * d ** 4 / 32.0
    return np.where(near, series, direct)


def logarithmic() -> MeanDescriptor:
    """Logarithmic mean, f(x) = (x - 1) / log x."""
    return MeanDescriptor(
        name="logarithmic",
        generator=Generator(f=_logarithmic_f, f_prime=_logarithmic_f_prime),
    )


def heinz(p: float) -> MeanDescriptor:
    """Heinz mean, f(x) = (x^p + x^{1-p}) / 2."""
    p = _check_weight("heinz", p)
    q = 1.0 - p
    return MeanDescriptor(
        name=f"heinz:{p:g}",
        generator=Generator(
            f=lambda x: (np.asarray(x, dtype=float) ** p + np.asarray(x, dtype=float) ** q) / 2.0,
            f_prime=lambda x: (
                p * np.asarray(x, dtype=float) ** (p - 1.0) + q * np.asarray(x, dtype=float) ** (q - 1.0)
            ) / 2.0,
        ),
    )


def measure_mean(mu: GeneratorMeasure, name: str = "") -> MeanDescriptor:
    return MeanDescriptor(name=name or mu.label or "measure", measure=mu)


_ALIASES = {
    "#": "geometric:0.5",
    "!": "harmonic:0.5",
    "nabla": "arithmetic:0.5",
}

_PARAMETRIC = {
    "arithmetic": arithmetic,
    "harmonic": harmonic,
    "geometric": geometric,
    "ah-geo": ah_geometric,
    "heinz": heinz,
}

_FIXED = {
    "parallel-sum": normalized_parallel_sum,
    "logarithmic": logarithmic,
}


def named_mean(spec: str) -> MeanDescriptor:
    """Parse "family[:parameter]" (e.g. "geometric:0.5", "ah-geo:0.25", "#").

    Raises:
        ParseError: for unknown families or malformed parameters.
    """
    text = _ALIASES.get(spec.strip(), spec.strip())
    family, _, parameter = text.partition(":")
    if family in _FIXED:
        if parameter:
            raise ParseError(f"{family} takes no parameter, got {spec!r}")
        return _FIXED[family]()
    if family not in _PARAMETRIC:
        known = ", ".join(sorted([*_PARAMETRIC, *_FIXED, *_ALIASES]))
        raise ParseError(f"Unknown mean {spec!r}; expected one of {known}")
    if not parameter:
        raise ParseError(f"Mean spec {spec!r} needs a parameter, e.g. {family}:0.5")
    try:
        value = float(parameter)
    except ValueError as err:
        raise ParseError(f"Malformed parameter in mean spec {spec!r}") from err
    return _PARAMETRIC[family](value)
