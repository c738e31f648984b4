"""Kubo-Ando operator means and barycenters of positive-definite matrices.

Means are built from measures on [0, 1] (or explicit generators); barycenters
are computed for the Riemannian trace metric, Bures-Wasserstein, generalized
quantum Hellinger divergences and divergences of symmetric means.
"""

from opmeans.config import TOOL_VERSION as __version__
from opmeans.barycenters import (
    SolverConfig,
    SolverReport,
    WeightedEnsemble,
    bw_barycenter,
    direct_minimize,
    geometric_barycenter_closed_form,
    gradient_check,
    hellinger_barycenter,
    ka_barycenter,
    karcher_mean,
    loss_Q,
    perturbation_check,
    solve,
    stationarity_residual,
)
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
    rtm_geodesic,
    rtm_velocity,
)
from opmeans.errors import (
    DegenerateMeasureError,
    DomainError,
    NotPositiveDefiniteError,
    OperatorMeansError,
    ParseError,
    RangeRestrictionError,
)
from opmeans.hermitian import (
    EigenDecomposition,
    HermitianMatrix,
    SpdMatrix,
    congruence,
    eigen_decompose,
    loewner_leq,
    matrix_function,
    operator_abs,
    random_spd,
)
from opmeans.kubo_ando import (
    MeanDescriptor,
    adjoint,
    mean,
    named_mean,
    parallel_sum,
    transpose,
)
from opmeans.measures import (
    GeneratorMeasure,
    HalfLineMeasure,
    convex_order_leq,
    eval_f,
    eval_f_prime_at_1,
    pushforward_to_unit,
)

__all__ = [
    "__version__",
    "SolverConfig",
    "SolverReport",
    "WeightedEnsemble",
    "bw_barycenter",
    "direct_minimize",
    "geometric_barycenter_closed_form",
    "gradient_check",
    "hellinger_barycenter",
    "ka_barycenter",
    "karcher_mean",
    "loss_Q",
    "perturbation_check",
    "solve",
    "stationarity_residual",
    "GeodesicPoint",
    "SigmaPotential",
    "bw_curve_verbatim",
    "bw_geodesic",
    "bw_interpolant",
    "d_bw",
    "d_rtm",
    "g_sigma",
    "phi_mu",
    "phi_sigma",
    "rtm_geodesic",
    "rtm_velocity",
    "DegenerateMeasureError",
    "DomainError",
    "NotPositiveDefiniteError",
    "OperatorMeansError",
    "ParseError",
    "RangeRestrictionError",
    "EigenDecomposition",
    "HermitianMatrix",
    "SpdMatrix",
    "congruence",
    "eigen_decompose",
    "loewner_leq",
    "matrix_function",
    "operator_abs",
    "random_spd",
    "MeanDescriptor",
    "adjoint",
    "mean",
    "named_mean",
    "parallel_sum",
    "transpose",
    "GeneratorMeasure",
    "HalfLineMeasure",
    "convex_order_leq",
    "eval_f",
    "eval_f_prime_at_1",
    "pushforward_to_unit",
]
