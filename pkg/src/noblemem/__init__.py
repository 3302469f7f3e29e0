"""noblemem: simulator and optimal-control toolkit for an optical quantum
memory that maps photons onto long-lived noble-gas spins via an alkali
ensemble."""

from .errors import (
    ConfigError,
    DegenerateRates,
    GridMismatch,
    InvalidRegime,
    NobleMemError,
    NonConvergence,
    NotNormalized,
    ResolutionError,
    StiffnessError,
    Unreachable,
)
from .model import (
    ControlSchedule,
    Envelope,
    PhysicalParams,
    Trajectory,
    exchange_rate_from_microscopic,
    flux_balance,
    output_field,
    propagate_full,
    propagate_reduced,
    rhs_full,
)
from .pulses import (
    PulseSpec,
    exponential_input,
    mode_overlap,
    photon_number,
    time_reverse,
)
from .kernels import (
    ADIABATIC,
    ALKALI_STORAGE,
    NOBLE_STORAGE,
    SEQUENTIAL,
    KernelSeries,
    analytic_efficiency,
    build_kernel,
    control_stimulated_rate,
    decoupled_relaxation,
    exchange_stimulated_rate,
    kernel_efficiency,
    matched_efficiency,
    shape_control_matched,
    swap_transfer_efficiency,
)
from .control import (
    ControlVector,
    OptResult,
    classify_solution,
    efficiency_map,
    gradient_adjoint,
    gradient_ascent,
    initial_controls,
    objective,
    optimize_cell,
    simulate_storage,
    storage_grid,
)
from .protocols import (
    MemoryResult,
    ProtocolPlan,
    Stage,
    build_adiabatic,
    build_retrieval,
    build_sequential,
    run_memory,
)
from .config import ScenarioConfig, load_config, preset_helium, save_config

__version__ = "0.1.0"
