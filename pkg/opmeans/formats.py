"""JSON codecs for matrices, measures, ensembles and solver reports.

Matrix:    {"dim": n, "entries": [[[re, im], ...], ...]}  (bare reals accepted)
Measure:   {"atoms": [[l, w], ...],
            "density": {"family": "jacobi" | "legendre", "p": p, "nodes": N},
            "nodes": [[l, q], ...], "density_support": [a, b]}
Ensemble:  {"weights": [...], "matrices": [<matrix>, ...]}

Writers emit sorted keys and a trailing newline so files are byte-stable.
"""

import json
from pathlib import Path
from typing import Any, Union

import numpy as np

from opmeans.barycenters import WeightedEnsemble
from opmeans.config import DEFAULT_NODE_COUNT
from opmeans.errors import ParseError
from opmeans.hermitian import HermitianMatrix
from opmeans.kubo_ando import MeanDescriptor, measure_mean, named_mean
from opmeans.measures import (
    GeneratorMeasure,
    dirac,
    power_measure,
    two_point,
    uniform_measure,
)

PathLike = Union[str, Path]


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def read_json(path: PathLike) -> Any:
    """
    Raises:
        FileNotFoundError: if the file is missing.
        ParseError: if the file is not valid JSON.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: invalid JSON ({err})") from err


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_json(path: PathLike, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def _entry(value: Any) -> complex:
    if isinstance(value, bool):
        raise ParseError(f"Matrix entry must be a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value, 0.0)
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ParseError(f"Matrix entry must be a number or [re, im], got {value!r}")


def matrix_from_json(obj: Any) -> HermitianMatrix:
    if not isinstance(obj, dict) or "entries" not in obj:
        raise ParseError('Matrix JSON needs an "entries" field')
    rows = obj["entries"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ParseError('"entries" must be a non-empty list of rows')
    dim = obj.get("dim", len(rows))
    if not isinstance(dim, int) or dim != len(rows) or any(len(r) != dim for r in rows):
        raise ParseError(f"Matrix JSON is not {dim}x{dim}")
    return HermitianMatrix(np.array([[_entry(v) for v in row] for row in rows], dtype=complex))


def matrix_to_json(X: HermitianMatrix) -> dict:
    return {
        "dim": X.dim,
        "entries": [[[float(v.real), float(v.imag)] for v in row] for row in X.entries],
    }


def read_matrix(path: PathLike) -> HermitianMatrix:
    return matrix_from_json(read_json(path))


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

def _pairs(obj: Any, key: str) -> list[tuple[float, float]]:
    raw = obj.get(key, [])
    if not isinstance(raw, list):
        raise ParseError(f'"{key}" must be a list of [location, mass] pairs')
    pairs = []
    for item in raw:
        if not (isinstance(item, list) and len(item) == 2):
            raise ParseError(f'"{key}" entries must be [location, mass] pairs, got {item!r}')
        try:
            pairs.append((float(item[0]), float(item[1])))
        except (TypeError, ValueError) as err:
            raise ParseError(f'Non-numeric entry in "{key}": {item!r}') from err
    return pairs


def measure_from_json(obj: Any) -> GeneratorMeasure:
    """Build a measure; a "density" block receives the mass left over by the atoms."""
    if not isinstance(obj, dict):
        raise ParseError("Measure JSON must be an object")
    atoms = _pairs(obj, "atoms")
    nodes = _pairs(obj, "nodes")
    density = obj.get("density")

    if density is None:
        support = obj.get("density_support", ())
        if not (isinstance(support, (list, tuple)) and len(support) in (0, 2)):
            raise ParseError('"density_support" must be a [low, high] pair')
        return GeneratorMeasure(
            atom_locations=[loc for loc, _ in atoms],
            atom_masses=[m for _, m in atoms],
            node_locations=[loc for loc, _ in nodes],
            node_weights=[q for _, q in nodes],
            density_support=tuple(support),
        )
    if nodes:
        raise ParseError('Give either "density" or explicit "nodes", not both')
    if not isinstance(density, dict):
        raise ParseError('"density" must be an object')

    remaining = 1.0 - sum(m for _, m in atoms)
    count = density.get("nodes", DEFAULT_NODE_COUNT)
    if not isinstance(count, int) or isinstance(count, bool):
        raise ParseError(f'"density.nodes" must be an integer, got {count!r}')
    family = density.get("family")
    if family == "jacobi":
        try:
            p = float(density["p"])
        except (KeyError, TypeError, ValueError) as err:
            raise ParseError('"jacobi" density needs a numeric "p"') from err
        return power_measure(p, count, mass=remaining, atoms=atoms)
    if family == "legendre":
        return uniform_measure(count, mass=remaining, atoms=atoms)
    raise ParseError(f'Unknown density family {family!r}; expected "jacobi" or "legendre"')


def measure_to_json(mu: GeneratorMeasure) -> dict:
    data = {
        "atoms": [[float(loc), float(m)] for loc, m in zip(mu.atom_locations, mu.atom_masses)],
        "nodes": [[float(loc), float(q)] for loc, q in zip(mu.node_locations, mu.node_weights)],
    }
    if mu.density_support:
        data["density_support"] = list(mu.density_support)
    return data


def _number(text: str, spec: str) -> float:
    try:
        return float(text)
    except ValueError as err:
        raise ParseError(f"Malformed number {text!r} in {spec!r}") from err


def parse_measure_spec(spec: str) -> GeneratorMeasure:
    """"dirac:l", "two-point:l", "power:p[:N]", "uniform[:N]", or a measure JSON path."""
    family, _, rest = spec.partition(":")
    parts = rest.split(":") if rest else []
    if family == "dirac" and len(parts) == 1:
        return dirac(_number(parts[0], spec))
    if family == "two-point" and len(parts) == 1:
        return two_point(_number(parts[0], spec))
    if family == "power" and len(parts) in (1, 2):
        nodes = int(_number(parts[1], spec)) if len(parts) == 2 else DEFAULT_NODE_COUNT
        return power_measure(_number(parts[0], spec), nodes)
    if family == "uniform" and len(parts) <= 1:
        nodes = int(_number(parts[0], spec)) if parts else DEFAULT_NODE_COUNT
        return uniform_measure(nodes)
    if Path(spec).suffix == ".json" or Path(spec).exists():
        return measure_from_json(read_json(spec))
    raise ParseError(
        f"Unknown measure {spec!r}; expected dirac:l, two-point:l, power:p[:N], uniform[:N] "
        "or a measure JSON file"
    )


def parse_mean_spec(spec: str) -> MeanDescriptor:
    """Named mean ("geometric:0.5", "#", ...) or "measure:<measure spec>"."""
    if spec.startswith("measure:"):
        inner = spec[len("measure:"):]
        return measure_mean(parse_measure_spec(inner), name=spec)
    return named_mean(spec)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def ensemble_from_json(obj: Any) -> WeightedEnsemble:
    if not isinstance(obj, dict) or "matrices" not in obj or "weights" not in obj:
        raise ParseError('Ensemble JSON needs "weights" and "matrices"')
    matrices, weights = obj["matrices"], obj["weights"]
    if not isinstance(matrices, list) or not isinstance(weights, list):
        raise ParseError('"weights" and "matrices" must be lists')
    try:
        weights = [float(w) for w in weights]
    except (TypeError, ValueError) as err:
        raise ParseError("Ensemble weights must be numbers") from err
    return WeightedEnsemble(tuple(matrix_from_json(m) for m in matrices), np.array(weights))


def ensemble_to_json(E: WeightedEnsemble) -> dict:
    return {
        "weights": [float(w) for w in E.weights],
        "matrices": [matrix_to_json(A) for A in E.matrices],
    }


def read_ensemble(path: PathLike) -> WeightedEnsemble:
    return ensemble_from_json(read_json(path))
