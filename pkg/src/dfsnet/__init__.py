"""Decoherence-free probe design and QFI analysis for qubit sensor networks."""

from .geometry import (
    FieldModel,
    SensorArray,
    field_amplitude,
    preset_array,
    sampling_map_jacobian,
    sampling_vector,
    sampling_vectors,
)
from .probes import (
    InsensitiveSubspace,
    ProbeMetrics,
    design_probe,
    first_order_silencer,
    flip_schedule,
    grid_silencer,
    insensitive_subspace,
    mirror_charge_probe,
    probe_metrics,
    sphere_suppressing_pair,
)
from .noise import (
    FixedPositionGaussianStrength,
    GaussianImage,
    ProductNoise,
    RadialShellSource,
    TruncatedGaussianSource,
    UniformVolumeSource,
    pushforward_gaussian,
    sample_sets,
)
from .qfi import (
    brute_force_qfi,
    decoherence_closed_form,
    decoherence_from_rates,
    decoherence_mc,
    qfi_rate_and_topt,
    qfi_time_limited,
    qfi_value,
    qfi_with_dephasing,
    separable_bound,
)
from .analysis import (
    GridSpec,
    MapResult,
    convergence_study,
    delta_map,
    full_measure_rank_check,
    noise_impact_map,
    phase_sweep,
    sensitivity_map,
    two_circle_scaling_study,
    worst_case_delta,
)

__version__ = "0.1.0"
