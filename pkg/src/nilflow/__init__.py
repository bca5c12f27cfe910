"""Normal sub-Riemannian flows on metabelian Carnot groups.

Exact rational structure constants in, closed-form reduced Hamiltonians
out; plus extremal integration/lifting, symbolic first-integral
certificates, metric-line exclusion tests, and cut-time bounds.
"""

from .analysis import (
    EngelFamily,
    HillReport,
    IntegrabilityReport,
    MetricLineVerdict,
    engel_integrals,
    hill_average,
    involution_and_independence,
    metric_line_test,
    verify_prime_integral,
)
from .catalog import CatalogEntry, UnknownEntry, eng_group, export_spec, get, names
from .coords import (
    Connection,
    Frame,
    NotMetabelian,
    compute_connection,
    coordinate_frame,
    verify_frame_brackets,
)
from .dynamics import (
    IMPLICIT_MIDPOINT,
    RK4,
    CutTimeReport,
    EnergyDriftExceeded,
    Trajectory,
    cut_time_bound,
    detect_period,
    hamiltonian_vector_field,
    integrate,
    integrate_reduced,
    lift,
    period_quadrature_1d,
)
from .lie_core import (
    LieAlgebra,
    LieAlgebraError,
    Splitting,
    check_adapted_splitting,
    is_metabelian,
    lower_central_series,
    malcev_order,
    stratify,
    validate_algebra,
)
from .poly import Poly, VariableSpace, phase_space, reduced_space, x_space
from .reduction import (
    SYMBOLIC,
    ReducedSystem,
    build_group_from_potential,
    full_hamiltonian,
    momentum_functions,
    reduce,
    reduce_from_full,
    reduced_system_for_potentials,
)

__version__ = "0.1.0"

__all__ = [
    "CatalogEntry",
    "Connection",
    "CutTimeReport",
    "EnergyDriftExceeded",
    "EngelFamily",
    "Frame",
    "HillReport",
    "IMPLICIT_MIDPOINT",
    "IntegrabilityReport",
    "LieAlgebra",
    "LieAlgebraError",
    "MetricLineVerdict",
    "NotMetabelian",
    "Poly",
    "RK4",
    "ReducedSystem",
    "SYMBOLIC",
    "Splitting",
    "Trajectory",
    "UnknownEntry",
    "VariableSpace",
    "build_group_from_potential",
    "check_adapted_splitting",
    "compute_connection",
    "coordinate_frame",
    "cut_time_bound",
    "detect_period",
    "eng_group",
    "engel_integrals",
    "export_spec",
    "full_hamiltonian",
    "get",
    "hamiltonian_vector_field",
    "hill_average",
    "integrate",
    "integrate_reduced",
    "involution_and_independence",
    "is_metabelian",
    "lift",
    "lower_central_series",
    "malcev_order",
    "metric_line_test",
    "momentum_functions",
    "names",
    "period_quadrature_1d",
    "phase_space",
    "reduce",
    "reduce_from_full",
    "reduced_space",
    "reduced_system_for_potentials",
    "stratify",
    "validate_algebra",
    "verify_frame_brackets",
    "verify_prime_integral",
    "x_space",
]
