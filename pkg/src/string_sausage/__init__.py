"""Simulation of a random string (stochastic heat equation on a circle)
among Poissonian traps: exact spectral evolution, sausage-volume geometry,
annealed/quenched survival estimation, and proof-machinery diagnostics.
"""

from .asymptotics import (
    ChainInvariantError,
    ClearingBound,
    ConfinementReport,
    ExponentFit,
    GSpaceReport,
    RangeSmoothingReport,
    StoppingChain,
    calibrate_lambda,
    chain_L,
    chain_delta,
    choose_E,
    clearing_bound,
    clearing_exponent,
    confinement_stats,
    exponent_fit,
    gspace_ratio,
    maximize_clearing_exponent,
    range_smoothing_check,
    stopping_chain,
    tau_sequence,
    unit_ball_volume,
)
from .geometry import (
    BoxCountResult,
    PointCloud,
    ResolutionWarning,
    SausageEstimate,
    bounding_box,
    box_counting_dimension,
    occupied_cube_count,
    sausage_volume_hit_or_miss,
    sausage_volume_voxel,
    wiener_sausage_volume,
)
from .rng import substream
from .simulate import Trace, brownian_path, simulate
from .spectral import (
    FieldSamples,
    ModelParams,
    StringState,
    evaluate,
    evaluate_at,
    evolve,
    heat_convolve,
    init_from_profile,
    mode_rates,
    noise_segment,
    sample_stationary_field,
    variance_series,
    zero_state,
)
from .statistics import (
    IndependenceReport,
    PathRecord,
    center_of_mass,
    independence_test,
    radius,
    range_of,
)
from .survival import (
    ResolutionError,
    ScaledParams,
    ScalingReport,
    SurvivalEstimate,
    annealed_hard,
    annealed_soft,
    environment_for_cloud,
    quenched,
    resolution_doubling_report,
    scaled_unit_params,
    scaling_check,
    scaling_transform,
    survive_hard_once,
)
from .traps import (
    Box,
    GridIndex,
    PoissonEnvironment,
    PotentialKind,
    PotentialSpec,
    any_contact,
    contact_counts,
    min_distance,
    path_functional,
    potential_at,
    sample_environment,
)

__version__ = "0.1.0"
