"""Multipath component profiling, tracking and prediction.

Estimates per-path (delay, amplitude, phase) parameters from band-limited
channel impulse response profiles via iterative sinc-matching refinement,
plus the surrounding machinery: beamformed channel synthesis, dataset
generation, model-order selection, a subspace delay estimator baseline, a
learned starting-point initializer, and time-series prediction of the
parameters with spline extrapolation.
"""

from ._kernels import ACTIVE_BACKEND, available_backends
from .channel import (
    DatasetSpec,
    beamform,
    freq_to_cir,
    generate_channel,
    generate_params,
    select_strongest_beam,
    steering_vector,
    synth_channel_tensor,
    synth_freq_response,
)
from .config import SystemConfig, load_config
from .dataset_io import (
    ChannelRecord,
    config_from_metadata,
    generate_dataset,
    iter_dataset,
    load_dataset,
    read_metadata,
    write_dataset,
)
from .errors import (
    ConfigurationError,
    EstimationError,
    FormatError,
    MpcProfError,
    NumericError,
    TrackLostError,
)
from .esprit import EspritConfig, esprit_delays, ls_amp_phase
from .estimator import (
    EstimateReport,
    SearchBounds,
    SearchSchedule,
    estimate_initial,
    refine,
    track,
)
from .initializer import (
    cancel_pick_init,
    NnInput,
    WeightBundle,
    load_bundle,
    nn_forward,
    nn_infer,
    peak_pick_init,
    prepare_input,
    save_bundle,
)
from .model_order import (
    ModeSingularValues,
    hosvd_singular_values,
    nn_model_order,
    select_model_order,
    singular_value_features,
)
from .predictor import (
    ParameterTrackSet,
    evaluate_horizon,
    extrapolate,
    fit_tracks,
    horizon_to_csv,
    is_model_violation,
    predict_csi,
)
from .profiler import (
    QuantizerSpec,
    SincBank,
    default_bank,
    denoise_threshold,
    profile,
    profiling_loss,
    reconstruct,
    sample_cir,
    to_db,
    window_error,
    write_profile_csv,
)
from .scenario import (
    DriftScenario,
    ParameterLaw,
    PathLaws,
    load_scenario,
    random_drift_scenario,
    scenario_from_dict,
    scenario_from_params,
    synthesize_truth,
)
from .types import (
    BeamformedChannel,
    ChannelTensor,
    ComplexCir,
    MpcParamSet,
    ProfiledCir,
    wrap_phase,
)

__version__ = "0.1.0"

__all__ = [
    "ACTIVE_BACKEND",
    "available_backends",
    "BeamformedChannel",
    "ChannelRecord",
    "ChannelTensor",
    "ComplexCir",
    "ConfigurationError",
    "DatasetSpec",
    "DriftScenario",
    "EspritConfig",
    "EstimateReport",
    "EstimationError",
    "FormatError",
    "ModeSingularValues",
    "MpcParamSet",
    "MpcProfError",
    "NnInput",
    "NumericError",
    "ParameterLaw",
    "ParameterTrackSet",
    "PathLaws",
    "ProfiledCir",
    "QuantizerSpec",
    "SearchBounds",
    "SearchSchedule",
    "SincBank",
    "SystemConfig",
    "TrackLostError",
    "WeightBundle",
    "beamform",
    "cancel_pick_init",
    "config_from_metadata",
    "default_bank",
    "denoise_threshold",
    "esprit_delays",
    "estimate_initial",
    "evaluate_horizon",
    "extrapolate",
    "fit_tracks",
    "freq_to_cir",
    "generate_dataset",
    "generate_channel",
    "generate_params",
    "horizon_to_csv",
    "hosvd_singular_values",
    "is_model_violation",
    "iter_dataset",
    "load_bundle",
    "load_config",
    "load_dataset",
    "load_scenario",
    "ls_amp_phase",
    "nn_forward",
    "nn_infer",
    "nn_model_order",
    "peak_pick_init",
    "predict_csi",
    "prepare_input",
    "profile",
    "profiling_loss",
    "random_drift_scenario",
    "read_metadata",
    "reconstruct",
    "refine",
    "sample_cir",
    "save_bundle",
    "scenario_from_dict",
    "scenario_from_params",
    "select_model_order",
    "select_strongest_beam",
    "singular_value_features",
    "steering_vector",
    "synth_channel_tensor",
    "synth_freq_response",
    "synthesize_truth",
    "to_db",
    "write_dataset",
    "track",
    "window_error",
    "wrap_phase",
    "write_profile_csv",
    "__version__",
]
