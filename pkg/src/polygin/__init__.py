"""Polyanalytic Ginibre ensembles.

Kernels for planar Landau-level determinantal point processes, exact
sampling, linear statistics, cumulants, and the limiting variance
predictions they converge to.
"""

__version__ = "0.1.0"

from .polyalg import (
    GaussRational,
    PolyPoly,
    DiffOpSpec,
    DegreeBudgetError,
    wirtinger,
    laplacian,
    apply_T,
    gaussian_inner,
    plain_integral,
    basis_monomial,
    monomial_norm_sq,
    apply_diffop,
)
from .kernels import (
    KernelSpec,
    BasisFunction,
    CapacityError,
    laguerre,
    eval_ginibre,
    basis_functions,
    eval_kernel,
    eval_kernel_many,
    intensity,
    cross_path_check,
)
from .theory import (
    TestFunction,
    TestFunctionError,
    VariancePrediction,
    parse_testfn,
    h1_seminorm,
    h_half_seminorm,
    predicted_variance,
)
from .sampler import (
    PointSample,
    RadialProposal,
    SamplingError,
    sample,
    sample_many,
    empirical_intensity,
    write_samples_csv,
)
from .statistics import (
    QuadratureGrid,
    GkRepresentation,
    CumulantReport,
    GridMismatchError,
    default_grid,
    build_Gk,
    linear_statistic,
    expected_trace,
    variance_quadrature,
    cumulant_exact_smalln,
    verify_crossterms,
    mc_cumulant_report,
)

__all__ = [name for name in dir() if not name.startswith("_")]
