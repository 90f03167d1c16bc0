"""Numerical laboratory for local times of anisotropic Gaussian fields.

Subpackages:
    metrics     anisotropic metrics, balls, dyadic grids
    geometry    Voronoi cells, covering counts, min-distance integrals
    covariance  exact covariance models (fBm sums, heat equation)
    sampling    covariance-exact field sampling, conditional variance
    localtime   occupation-density estimators and scaling diagnostics
    levelset    level-set extraction and box-counting dimension
    config      strict key=value experiment configuration
    experiments CSV-producing experiment families
    cli         reproducible command-line harness
    report      figure rendering from run directories
"""

from .metrics import (AnisoBall, HurstVector, dyadic_cells, q_exponent, rho,
                      rho_tilde, unit_rho_ball_measure)
from .geometry import (VoronoiPartition, covering_count, min_dist_integral,
                       nearest_generator, psi_transform, star_shape_check)
from .covariance import (FbmType, SheRiesz, SheWhite, Transformed,
                         cov_fbm_type, cov_she_riesz, cov_she_white,
                         model_from_config, she_increment_msq)
from .sampling import (FieldSample, conditional_variance, sample, slnd_scan)
from .localtime import (occupation_histogram, smoothed_local_time,
                        moment_scaling, holder_gauge_ratio, chung_lil_ratio,
                        transform_identity_check)
from .levelset import (LevelSetEstimate, box_dimension,
                       euclidean_dimension_formula, extract_level_set,
                       gauge_mass_diagnostic)

__all__ = [
    "AnisoBall", "HurstVector", "dyadic_cells", "q_exponent", "rho",
    "rho_tilde", "unit_rho_ball_measure",
    "VoronoiPartition", "covering_count", "min_dist_integral",
    "nearest_generator", "psi_transform", "star_shape_check",
    "FbmType", "SheRiesz", "SheWhite", "Transformed", "cov_fbm_type",
    "cov_she_riesz", "cov_she_white", "model_from_config", "she_increment_msq",
    "FieldSample", "conditional_variance", "sample", "slnd_scan",
    "occupation_histogram", "smoothed_local_time", "moment_scaling",
    "holder_gauge_ratio", "chung_lil_ratio", "transform_identity_check",
    "LevelSetEstimate", "box_dimension", "euclidean_dimension_formula",
    "extract_level_set", "gauge_mass_diagnostic",
]
