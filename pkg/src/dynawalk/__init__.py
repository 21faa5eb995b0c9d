"""dynawalk: Monte Carlo toolkit for refreshing random walks, packing
entropy of compact sets, envelope integral tests, and lattice first-passage
estimates, with reproducible seeded parallel replication."""

from .envelope import (
    DELTA_INFINITE,
    Envelope,
    IntegralDiagnostic,
    delta_of_H,
    erdos_sequence,
    hdim_formula,
    is_delta_infinite,
    j_zeta_partial,
    psi_partial,
    psi_rho_threshold,
)
from .errors import (
    HardAssertionError,
    InconclusiveError,
    NumericDomainError,
    ResolutionError,
    ResourceError,
    ValidationError,
)
from .randvar import (
    IncrementDistribution,
    bivariate_upper,
    parse_distribution,
    phi_bar,
    sample_increment,
    sample_symmetric_stable,
)
from .report import VERSION, BracketReport, ExperimentReport
from .sets import (
    CompactSet1D,
    cantor_family,
    fit_entropy_exponent,
    from_intervals,
    from_points,
    full_interval,
    gap_family,
    interval_hit,
    kolmogorov_entropy,
    make_cantor,
    make_gap_set,
    make_sequence_set,
    minkowski_content,
    packing_number_points,
    parse_set_spec,
    union,
)
from .streams import RngStream, splitmix64

__version__ = VERSION

__all__ = [
    "BracketReport",
    "CompactSet1D",
    "DELTA_INFINITE",
    "Envelope",
    "ExperimentReport",
    "HardAssertionError",
    "InconclusiveError",
    "IncrementDistribution",
    "IntegralDiagnostic",
    "NumericDomainError",
    "ResolutionError",
    "ResourceError",
    "RngStream",
    "VERSION",
    "ValidationError",
    "bivariate_upper",
    "cantor_family",
    "delta_of_H",
    "erdos_sequence",
    "fit_entropy_exponent",
    "from_intervals",
    "from_points",
    "full_interval",
    "gap_family",
    "hdim_formula",
    "interval_hit",
    "is_delta_infinite",
    "j_zeta_partial",
    "kolmogorov_entropy",
    "make_cantor",
    "make_gap_set",
    "make_sequence_set",
    "minkowski_content",
    "packing_number_points",
    "parse_distribution",
    "parse_set_spec",
    "phi_bar",
    "psi_partial",
    "psi_rho_threshold",
    "sample_increment",
    "sample_symmetric_stable",
    "splitmix64",
    "union",
]
