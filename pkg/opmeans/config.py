import os
from pathlib import Path

# Load .env file from project root if present
_env_path = Path(__file__).parent.parent / ".env"
if _env_path.exists():
    for line in _env_path.read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#") and "=" in line:
            key, _, value = line.partition("=")
            os.environ.setdefault(key.strip(), value.strip())

# Hermitian core
ASYMMETRY_TOL = 1e-8
EPS_PD = 1e-10
LOEWNER_TOL = 1e-9

# Generator measures and quadrature
DEFAULT_NODE_COUNT = int(os.environ.get("OPMEANS_NODE_COUNT", "64"))
NODE_DOUBLING_TOL = 1e-8
NODE_DOUBLING_GRID = (0.1, 10.0, 25)  # geomspace(lo, hi, count)
MASS_TOL = 1e-10
GENERATOR_NORMALIZATION_TOL = 1e-12
CONVEX_ORDER_TOL = 1e-10
CONVEX_ORDER_GRID_SIZE = 201

# Scalar inversion of generators (log-space bracketing + Brent); tolerance on log x
INVERSE_RTOL = 1e-12

# Divergences
G_SIGMA_ABS_TOL = 1e-11
G_SIGMA_REL_TOL = 1e-12
RANGE_MARGIN = 1e-12
BW_RADICAND_TOL = 1e-10
INVERSE_CACHE_SIZE = 4096

# Barycenter solvers
SOLVER_TOL = float(os.environ.get("OPMEANS_SOLVER_TOL", "1e-10"))
SOLVER_MAX_ITER = int(os.environ.get("OPMEANS_MAX_ITER", "500"))
SOLVER_DAMPING = 1.0
DAMPING_FLOOR = 1.0 / 64.0
WEIGHT_TOL = 1e-12
INIT_DISAGREEMENT_TOL = 1e-6
DEGENERATE_INTERIOR_MASS = 1e-14
CG_MAX_ITER = 200
CG_RTOL = 1e-12

INIT_ARITHMETIC = "arithmetic"
INIT_HARMONIC = "harmonic"
INIT_AH_GEOMETRIC = "ah-geometric"
INIT_KINDS = (INIT_ARITHMETIC, INIT_HARMONIC, INIT_AH_GEOMETRIC)

# Loss / barycenter kinds
KIND_RTM = "rtm"
KIND_BW = "bw"
KIND_HELLINGER = "hellinger"
KIND_SIGMA = "sigma"
LOSS_KINDS = (KIND_RTM, KIND_BW, KIND_HELLINGER, KIND_SIGMA)

# Verification oracles
PERTURBATION_COUNT = 200
PERTURBATION_EPS = 1e-2
GRADIENT_STEP = 1e-5
GRADIENT_DIRECTIONS = 20

# CLI
TOOL_VERSION = "0.1.0"
SOLVER_DEFAULTS_PATH = str(Path(__file__).resolve().parent.parent / "config" / "solver_defaults.yaml")
MANIFEST_SUFFIX = ".manifest.json"
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE_ERROR = 2
EXIT_DOMAIN_ERROR = 3
EXIT_NOT_CONVERGED = 4
