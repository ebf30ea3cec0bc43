"""Linear neutral delay systems with distributed delays: simulation, spectra,
exact and approximate observability/controllability tests, and the duality
between observation and reachability maps.
"""

from .criteria import (
    DEFAULT_REGION,
    Failure,
    Holds,
    Property,
    Tolerances,
    Verdict,
    check_approx_observability,
    check_exact_controllability,
    check_exact_observability,
    controllability_index,
    matrix_rank,
)
from .duality import (
    DualityReport,
    F_apply,
    F_inverse_apply,
    GramianEstimate,
    adjoint_semigroup_apply,
    observability_gramian,
    reachability_apply,
    sandwich_ratios,
    solve_I_plus_V,
    tilde_generator_apply,
    tilde_resolvent_apply,
    verify_duality,
    volterra_apply,
)
from .errors import (
    CapExceeded,
    ContourHit,
    DomainViolation,
    MaxDepthExceeded,
    NeutralSystemError,
    OffGrid,
    SingularStep,
    Uncontrollable,
)
from .io import dump_system, dumps_report, load_fixture, load_system, system_from_dict, system_to_dict
from .model import (
    ComplexRegion,
    ConstantKernel,
    M2State,
    NeutralSystem,
    OutputKind,
    SampledKernel,
    ZeroKernel,
    delta_matrix,
    in_domain,
    m2_inner,
    m2_norm,
    transpose_system,
    validate_system,
)
from .simulate import Trajectory, convergence_probe, output_trace, semigroup_state, simulate
from .spectral import Root, char_det, eigenvalues_in_region, winding_count

__version__ = "0.1.0"
