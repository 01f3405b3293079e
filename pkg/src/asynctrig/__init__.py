"""Self-triggered sensor scheduling for sampled-data linear systems.

A controller that holds a zero-order-hold state estimate refreshed by at most
one sensor per period, and schedules whole horizons of sensor actions at a
time.  The package covers the full pipeline: exact discretization, horizon
enumeration, Lyapunov/LMI certificate synthesis, conic state-space
partitioning, four triggering mechanisms (online/offline, with and without
disturbance), and a closed-loop simulator with CSV/SVG reporting.
"""

from .certificates import (
    PerturbedOfflineCertificate,
    PerturbedOnlineCertificate,
    UnperturbedCertificate,
    build_U_c,
    build_U_sigma,
    certificate_from_dict,
    certificate_to_dict,
    choose_sigma_star,
    decay_factor,
    max_eps_feasible,
    reverify_certificate,
    synthesize_perturbed_offline,
    synthesize_perturbed_online,
    synthesize_unperturbed,
    ultimate_bound,
    verify_lmi_pair,
)
from .errors import ConfigError, ConstructionError, InfeasibleError, ResourceCapError
from .horizons import (
    avg_idle_metric,
    enumerate_horizons,
    horizon_from_text,
    horizon_to_text,
)
from .matrix_core import (
    is_psd,
    is_schur,
    mat_exp,
    solve_discrete_lyapunov,
    spectral_norm,
    spectral_radius,
    sym_eig_bounds,
    zoh_pair,
)
from .partition import (
    ConicRegion,
    make_partition,
    partition_from_dict,
    partition_to_dict,
    region_of,
    sprocedure_feasible,
)
from .plant import (
    DiscretePlant,
    PlantModel,
    disturbance_step_bound,
    growth_constants,
    horizon_transition,
    selection_matrices,
    step_matrix,
    transition_table,
)
from .presets import PRESET_NAMES, preset_config
from .simulation import (
    SimConfig,
    SimTrace,
    read_trace_csv,
    schur_threshold,
    simulate,
    utilization_metrics,
    write_decision_csv,
    write_trace_csv,
)
from .svgplots import emit_plots, parse_polyline
from .triggers import (
    OfflineTable,
    OnlinePerturbedPolicy,
    OnlineUnperturbedPolicy,
    TriggerDecision,
    build_offline_table_unperturbed,
    offline_perturbed_machinery,
    offline_perturbed_select,
    offline_select,
    online_perturbed_select,
    online_unperturbed_select,
)

__version__ = "0.1.0"
