"""Adiabatic transport on discretized quasi-continuous spectra.

A finite grid of momentum labels carries a smoothly deformed frame of
generalized eigenvectors.  The package integrates the physical
propagator, the geometric transport unitary, and the dynamical phase,
compares exact band leakage against its first-order oscillatory-integral
prediction, and exposes a config-driven experiment harness.
"""

from .errors import (
    AnalysisError,
    ConfigError,
    CrossingError,
    DegenerateSpectrumError,
    NoExteriorError,
    NoFeasibleBandError,
    StepBudgetError,
)
from .spectral import (
    ANGLE_SCHEDULES,
    DISPERSION_FAMILIES,
    EPS_CROSS,
    HBAR,
    ROTATION_BUILDERS,
    AngleSchedule,
    ContinuumModel,
    DispersionSchedule,
    FrameRotation,
    KGrid,
    banded_rotation,
    build_model,
    linear_dispersion,
    nearest_neighbor_rotation,
    quadratic_dispersion,
    random_banded_rotation,
    tabulated_dispersion,
)
from .bands import (
    BandPartition,
    CrossingReport,
    DifferentialProjector,
    WeylPacket,
    WeylProjection,
    band_projector,
    crossing_report,
    feasible_band_size,
    minimal_time,
    pair_gap,
    partition,
    project,
    projector,
    validate_noncrossing,
    virtual_gap,
    weyl_packet,
)
from .propagation import (
    CF4,
    MIDPOINT,
    SCHEMES,
    VARIANTS,
    GeneratorVariant,
    LiteralWindowDiagnostic,
    PropagationConfig,
    UnitaryFamily,
    deviation_from_identity,
    dynamical_phase,
    evolve_intertwiner,
    evolve_propagator,
    final_intertwiner,
    final_propagator,
    frame_velocity_overlaps,
    generator,
    generator_in_frame,
    generator_norm,
    intertwine_residual,
    intertwiner_step_budget,
    kato_state,
    literal_window_hermiticity,
    phase_family,
    phase_operator,
    propagator_step_budget,
    rotating_picture,
    wave_operator,
    weyl_band,
)
from .analysis import (
    ConvergenceFit,
    CriterionReport,
    LeakageReport,
    TransitionParts,
    adiabatic_criterion,
    convergence_study,
    coupling,
    fit_power_law,
    leakage_exact,
    leakage_first_order,
    leakage_wave_form,
    mandated_substeps,
    planned_substeps,
    sweep_leakage,
    transition_integral,
    transition_integral_parts,
    transition_weight,
    transition_weight_max_estimate,
)
from .config import ExperimentConfig, load_config
from .verify import verify_config

__version__ = "0.1.0"

__all__ = [
    "ANGLE_SCHEDULES",
    "AnalysisError",
    "AngleSchedule",
    "BandPartition",
    "CF4",
    "ConfigError",
    "ContinuumModel",
    "ConvergenceFit",
    "CriterionReport",
    "CrossingError",
    "CrossingReport",
    "DISPERSION_FAMILIES",
    "DegenerateSpectrumError",
    "DifferentialProjector",
    "DispersionSchedule",
    "EPS_CROSS",
    "ExperimentConfig",
    "FrameRotation",
    "GeneratorVariant",
    "HBAR",
    "KGrid",
    "LeakageReport",
    "LiteralWindowDiagnostic",
    "MIDPOINT",
    "NoExteriorError",
    "NoFeasibleBandError",
    "PropagationConfig",
    "ROTATION_BUILDERS",
    "SCHEMES",
    "StepBudgetError",
    "TransitionParts",
    "UnitaryFamily",
    "VARIANTS",
    "WeylPacket",
    "WeylProjection",
    "adiabatic_criterion",
    "band_projector",
    "banded_rotation",
    "build_model",
    "convergence_study",
    "coupling",
    "crossing_report",
    "deviation_from_identity",
    "dynamical_phase",
    "evolve_intertwiner",
    "evolve_propagator",
    "feasible_band_size",
    "final_intertwiner",
    "final_propagator",
    "fit_power_law",
    "frame_velocity_overlaps",
    "generator",
    "generator_in_frame",
    "generator_norm",
    "intertwine_residual",
    "intertwiner_step_budget",
    "kato_state",
    "leakage_exact",
    "leakage_first_order",
    "leakage_wave_form",
    "linear_dispersion",
    "literal_window_hermiticity",
    "load_config",
    "mandated_substeps",
    "minimal_time",
    "nearest_neighbor_rotation",
    "pair_gap",
    "partition",
    "phase_family",
    "phase_operator",
    "planned_substeps",
    "project",
    "projector",
    "propagator_step_budget",
    "quadratic_dispersion",
    "random_banded_rotation",
    "rotating_picture",
    "sweep_leakage",
    "tabulated_dispersion",
    "transition_integral",
    "transition_integral_parts",
    "transition_weight",
    "transition_weight_max_estimate",
    "validate_noncrossing",
    "verify_config",
    "virtual_gap",
    "wave_operator",
    "weyl_band",
    "weyl_packet",
]
