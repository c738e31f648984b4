"""Probability measures on [0, 1] that generate operator monotone functions.

A `GeneratorMeasure` mu produces the generator

    f_mu(x) = integral of x / ((1 - l) x + l) d mu(l),

so point masses at 0 and 1 contribute 1 and x respectively, and a point
mass at l gives the weighted harmonic generator. Absolutely continuous
parts are carried as fixed quadrature nodes, which turns every evaluation
into a finite sum.

`HalfLineMeasure` is the classical representation on [0, inf], with
generator x (1 + t) / (x + t); `pushforward_to_unit` maps it onto [0, 1]
through t -> t / (1 + t).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from opmeans.config import (
    CONVEX_ORDER_GRID_SIZE,
    CONVEX_ORDER_TOL,
    DEFAULT_NODE_COUNT,
    MASS_TOL,
    NODE_DOUBLING_GRID,
    NODE_DOUBLING_TOL,
)
from opmeans.errors import DomainError, MeasureError, QuadratureWarning


def _frozen(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GeneratorMeasure:
    """
    Probability measure on [0, 1]: atoms plus quadrature-sampled density.
    """

    atom_locations: np.ndarray = ()
    """
    Atom positions in [0, 1]
    """
    atom_masses: np.ndarray = ()
    """
    Strictly positive atom masses
    """
    node_locations: np.ndarray = ()
    """
    Quadrature nodes of the absolutely continuous part, inside (0, 1)
    """
    node_weights: np.ndarray = ()
    """
    Strictly positive quadrature weights
    """
    label: str = ""
    density_support: tuple = ()
    """
    Closed support (a, b) of the density the nodes sample; empty when the
    nodes are the measure itself. A density reaching 0 makes f(x)/x unbounded
    at 0+, one reaching 1 makes f unbounded at infinity, as for the power and
    uniform densities.
    """

    def __post_init__(self):
        for name in ("atom_locations", "atom_masses", "node_locations", "node_weights"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.density_support:
            a, b = (float(v) for v in self.density_support)
            if not 0.0 <= a < b <= 1.0 or self.node_locations.size == 0:
                raise MeasureError(f"Invalid density support {self.density_support!r}")
            object.__setattr__(self, "density_support", (a, b))

        if self.atom_locations.shape != self.atom_masses.shape:
            raise MeasureError("atom_locations and atom_masses differ in length")
        if self.node_locations.shape != self.node_weights.shape:
            raise MeasureError("node_locations and node_weights differ in length")
        if self.locations.size == 0:
            raise MeasureError("Measure has no atoms and no density nodes")
        if not (np.all(np.isfinite(self.locations)) and np.all(np.isfinite(self.masses))):
            raise MeasureError("Measure locations and masses must be finite")
        if np.any(self.masses <= 0):
            raise MeasureError("Atom masses and quadrature weights must be strictly positive")
        if np.any(self.atom_locations < 0) or np.any(self.atom_locations > 1):
            raise MeasureError("Atom locations must lie in [0, 1]")
        if np.any(self.node_locations <= 0) or np.any(self.node_locations >= 1):
            raise MeasureError("Density nodes must lie in (0, 1)")

        total = self.total_mass
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"Measure is not normalized: total mass {total:.12g}")

    @property
    def locations(self) -> np.ndarray:
        return np.concatenate([self.atom_locations, self.node_locations])

    @property
    def masses(self) -> np.ndarray:
        return np.concatenate([self.atom_masses, self.node_weights])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def barycenter(self) -> float:
        """c(mu) = integral of l d mu(l); equals f_mu'(1)."""
        return float(self.masses @ self.locations)

    @property
    def interior_mass(self) -> float:
        """Mass carried strictly inside (0, 1)."""
        lam = self.locations
        return float(self.masses[(lam > 0) & (lam < 1)].sum())

    def mass_at(self, location: float) -> float:
        return float(self.atom_masses[self.atom_locations == location].sum())

    def call_potential(self, s: np.ndarray) -> np.ndarray:
        """Integrated call payoff s -> integral of (l - s)_+ d mu(l)."""
        s = np.asarray(s, dtype=float)
        return np.maximum(self.locations - s[..., None], 0.0) @ self.masses

    def reflect(self) -> "GeneratorMeasure":
        """Image under l -> 1 - l; generates the transposed mean."""
        return GeneratorMeasure(
            atom_locations=1.0 - self.atom_locations,
            atom_masses=self.atom_masses,
            node_locations=1.0 - self.node_locations,
            node_weights=self.node_weights,
            label=f"reflect({self.label})" if self.label else "",
            density_support=(1.0 - self.density_support[1], 1.0 - self.density_support[0])
            if self.density_support else (),
        )

    def _density_reaches(self, endpoint: float) -> bool:
        return bool(self.density_support) and endpoint in self.density_support

    def value_range(self) -> tuple[float, float]:
        """Limits of f_mu at 0+ and at infinity."""
        lam, mass = self.locations, self.masses
        low = self.mass_at(0.0)
        if self.mass_at(1.0) > 0 or self._density_reaches(1.0):
            return low, math.inf
        return low, float(mass @ (1.0 / (1.0 - lam)))

    def slopes(self) -> tuple[float, float]:
        """Limits of f_mu(x) / x at 0+ and at infinity."""
        lam, mass = self.locations, self.masses
        at_infinity = self.mass_at(1.0)
        if self.mass_at(0.0) > 0 or self._density_reaches(0.0):
            return math.inf, at_infinity
        return float(mass @ (1.0 / lam)), at_infinity


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def dirac(location: float) -> GeneratorMeasure:
    """Point mass at `location`; generates the weighted harmonic mean."""
    return GeneratorMeasure(atom_locations=[location], atom_masses=[1.0], label=f"dirac:{location:g}")


def two_point(weight: float) -> GeneratorMeasure:
    """(1 - weight) delta_0 + weight delta_1; generates the weighted arithmetic mean."""
    if not 0.0 <= weight <= 1.0:
        raise MeasureError(f"two-point weight must lie in [0, 1], got {weight}")
    if weight in (0.0, 1.0):
        return dirac(weight)
    return GeneratorMeasure(
        atom_locations=[0.0, 1.0],
        atom_masses=[1.0 - weight, weight],
        label=f"two-point:{weight:g}",
    )


def discrete(locations: Sequence[float], masses: Sequence[float], label: str = "") -> GeneratorMeasure:
    return GeneratorMeasure(atom_locations=locations, atom_masses=masses, label=label)


def _jacobi_power_rule(p: float, nodes: int, mass: float) -> tuple[np.ndarray, np.ndarray]:
    # d mu = sin(pi p)/pi l^(p-1) (1-l)^(-p) dl; with l = (1+x)/2 the Jacobian
    # factors of the Gauss-Jacobi weight (1-x)^(-p) (1+x)^(p-1) cancel exactly
    x, w = special.roots_jacobi(nodes, -p, p - 1.0)
    lam = (1.0 + x) / 2.0
    weights = math.sin(math.pi * p) / math.pi * w
    return lam, weights * (mass / weights.sum())


def _legendre_rule(nodes: int, mass: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(nodes)
    return (1.0 + x) / 2.0, w * (mass / w.sum())


def _check_node_doubling(
    rule: Callable[[int], tuple[np.ndarray, np.ndarray]],
    nodes: int,
    label: str,
) -> None:
    grid = np.geomspace(*NODE_DOUBLING_GRID)
    coarse = _eval_sum(*rule(nodes), grid)
    fine = _eval_sum(*rule(2 * nodes), grid)
    change = float(np.max(np.abs(fine - coarse)))
    if change >= NODE_DOUBLING_TOL:
        warnings.warn(
            f"{label}: doubling the node count from {nodes} changes the generator by "
            f"{change:.2e}",
            QuadratureWarning,
            stacklevel=3,
        )


def power_measure(
    p: float,
    nodes: int = DEFAULT_NODE_COUNT,
    mass: float = 1.0,
    atoms: Sequence[tuple[float, float]] = (),
    check: bool = True,
) -> GeneratorMeasure:
    """Gauss-Jacobi discretization of the measure generating x^p.

    Args:
        p: Exponent in (0, 1).
        nodes: Number of quadrature nodes.
        mass: Mass given to the density; the remainder belongs to `atoms`.
        atoms: Extra (location, mass) pairs.
        check: Warn with `QuadratureWarning` if doubling the node count moves
            the generator by NODE_DOUBLING_TOL or more.
    """
    if not 0.0 < p < 1.0:
        raise MeasureError(f"power exponent must lie in (0, 1), got {p}")
    if nodes < 1:
        raise MeasureError(f"node count must be positive, got {nodes}")
    label = f"power:{p:g}"
    if check:
        _check_node_doubling(lambda n: _jacobi_power_rule(p, n, 1.0), nodes, label)
    lam, weights = _jacobi_power_rule(p, nodes, mass)
    return _with_atoms(lam, weights, atoms, label)


def uniform_measure(
    nodes: int = DEFAULT_NODE_COUNT,
    mass: float = 1.0,
    atoms: Sequence[tuple[float, float]] = (),
    check: bool = True,
) -> GeneratorMeasure:
    """Gauss-Legendre discretization of Lebesgue measure; f(x) = x log x / (x - 1)."""
    if nodes < 1:
        raise MeasureError(f"node count must be positive, got {nodes}")
    if check:
        _check_node_doubling(lambda n: _legendre_rule(n, 1.0), nodes, "uniform")
    lam, weights = _legendre_rule(nodes, mass)
    return _with_atoms(lam, weights, atoms, "uniform")


def _with_atoms(lam, weights, atoms, label) -> GeneratorMeasure:
    atoms = list(atoms)
    return GeneratorMeasure(
        atom_locations=[loc for loc, _ in atoms],
        atom_masses=[m for _, m in atoms],
        node_locations=lam,
        node_weights=weights,
        label=label,
        density_support=(0.0, 1.0),
    )


def mixture(components: Sequence[tuple[float, GeneratorMeasure]]) -> GeneratorMeasure:
    """Convex combination sum_i a_i mu_i of generator measures."""
    if not components:
        raise MeasureError("mixture needs at least one component")
    coefficients = np.array([a for a, _ in components], dtype=float)
    if np.any(coefficients <= 0):
        raise MeasureError("mixture coefficients must be strictly positive")
    measures = [mu for _, mu in components]
    supports = [mu.density_support for mu in measures if mu.density_support]
    return GeneratorMeasure(
        atom_locations=np.concatenate([mu.atom_locations for mu in measures]),
        atom_masses=np.concatenate([a * mu.atom_masses for a, mu in components]),
        node_locations=np.concatenate([mu.node_locations for mu in measures]),
        node_weights=np.concatenate([a * mu.node_weights for a, mu in components]),
        label="mixture",
        density_support=(min(s[0] for s in supports), max(s[1] for s in supports)) if supports else (),
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _positive_argument(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"Generator argument must be finite and > 0, got min {np.min(arr)!r}")
    return arr


def _eval_sum(lam: np.ndarray, mass: np.ndarray, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return (x[..., None] / ((1.0 - lam) * x[..., None] + lam)) @ mass


def _scalar_or_array(value: np.ndarray, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def eval_f(mu: GeneratorMeasure, x):
    """f_mu(x) for x > 0 (scalar or array).

    Raises:
        DomainError: if some x is not strictly positive.
    """
    arr = _positive_argument(x)
    return _scalar_or_array(_eval_sum(mu.locations, mu.masses, arr), x)


def eval_f_prime(mu: GeneratorMeasure, x):
    arr = _positive_argument(x)
    lam = mu.locations
    denom = (1.0 - lam) * arr[..., None] + lam
    return _scalar_or_array((lam / denom ** 2) @ mu.masses, x)


def eval_f_prime_at_1(mu: GeneratorMeasure) -> float:
    """Weight parameter W = f_mu'(1) = c(mu)."""
    return mu.barycenter


# ---------------------------------------------------------------------------
# Half-line representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HalfLineMeasure:
    """
    Finite positive measure on [0, inf]; `math.inf` is an allowed atom location.
    """

    atom_locations: np.ndarray = ()
    atom_masses: np.ndarray = ()
    node_locations: np.ndarray = ()
    node_weights: np.ndarray = ()

    def __post_init__(self):
        for name in ("atom_locations", "atom_masses", "node_locations", "node_weights"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.atom_locations.shape != self.atom_masses.shape:
            raise MeasureError("atom_locations and atom_masses differ in length")
        if self.node_locations.shape != self.node_weights.shape:
            raise MeasureError("node_locations and node_weights differ in length")
        if np.any(self.atom_masses <= 0) or np.any(self.node_weights <= 0):
            raise MeasureError("Half-line masses must be strictly positive")
        if np.any(self.atom_locations < 0) or np.any(np.isnan(self.atom_locations)):
            raise MeasureError("Half-line atoms must lie in [0, inf]")
        if np.any(self.node_locations <= 0) or not np.all(np.isfinite(self.node_locations)):
            raise MeasureError("Half-line density nodes must lie in (0, inf)")
        if not math.isfinite(self.total_mass):
            raise MeasureError("Half-line measure must have finite mass")

    @property
    def total_mass(self) -> float:
        return float(self.atom_masses.sum() + self.node_weights.sum())

    @classmethod
    def power_density(cls, p: float, nodes: int = DEFAULT_NODE_COUNT) -> "HalfLineMeasure":
        """Representing measure of x^p on the half-line, sampled at mapped Gauss-Jacobi nodes."""
        if not 0.0 < p < 1.0:
            raise MeasureError(f"power exponent must lie in (0, 1), got {p}")
        lam, weights = _jacobi_power_rule(p, nodes, 1.0)
        return cls(node_locations=lam / (1.0 - lam), node_weights=weights)


def eval_f_half_line(m: HalfLineMeasure, x):
    """Direct evaluation of sum x (1 + t) / (x + t) dm(t); t = inf contributes x."""
    arr = _positive_argument(x)
    t = np.concatenate([m.atom_locations, m.node_locations])
    mass = np.concatenate([m.atom_masses, m.node_weights])
    finite = np.isfinite(t)
    xs = arr[..., None]
    terms = (xs * (1.0 + t[finite]) / (xs + t[finite])) @ mass[finite]
    terms = terms + arr * mass[~finite].sum()
    return _scalar_or_array(terms, x)


def _to_unit(t: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        lam = t / (1.0 + t)
    return np.where(np.isinf(t), 1.0, lam)


def pushforward_to_unit(m: HalfLineMeasure) -> GeneratorMeasure:
    """Image of m under t -> t / (1 + t), with inf -> 1.

    Quadrature weights travel with their nodes, so the total mass is preserved.

    Raises:
        MeasureError: if m does not have unit mass.
    """
    return GeneratorMeasure(
        atom_locations=_to_unit(m.atom_locations),
        atom_masses=m.atom_masses,
        node_locations=_to_unit(m.node_locations),
        node_weights=m.node_weights,
    )


# ---------------------------------------------------------------------------
# Convex order
# ---------------------------------------------------------------------------

def convex_order_leq(
    mu: GeneratorMeasure,
    nu: GeneratorMeasure,
    grid_size: int = CONVEX_ORDER_GRID_SIZE,
    tol: float = CONVEX_ORDER_TOL,
) -> bool:
    """mu precedes nu in the convex order.

    Equal barycenters plus dominance of the integrated call payoff at every
    support point of either measure and on a uniform grid. Both potentials
    are piecewise linear with kinks at support points, so this is exact for
    finite-node measures.
    """
    if abs(mu.barycenter - nu.barycenter) > tol:
        return False
    s = np.unique(np.concatenate([mu.locations, nu.locations, np.linspace(0.0, 1.0, grid_size)]))
    return bool(np.all(mu.call_potential(s) <= nu.call_potential(s) + tol))
