"""Minimal exposure-set selection for HDR capture.

Pick the smallest (or cheapest) subset of an exposure ladder that still gives
every scene pixel at least one well-exposed frame, by classifying pixels into
frame intervals and solving the resulting interval covering problem exactly.
"""

from .camera import (CameraProfile, NoiseModel, ResponseFunction,
                     default_profile, fit_noise_model, fit_response,
                     gamma_response, load_profile, noise_sigma, response_apply,
                     response_invert, save_profile, snr_db)
from .classify import (CaptureBounds, CoverageInstance, compute_imin,
                       coverage_intervals, dump_instance, estimate_imax,
                       grayscale, grayscale_image, load_instance, parse_instance)
from .cover import (ReductionTrace, Selection, WeightedInstance, brute_force,
                    load_selection, reduce_instance, save_selection, solve_unit,
                    solve_weighted, verify_cover)
from .errors import (ConfigError, EstimationError, FitError, InfeasibleError,
                     MetricError)
from .hdr import (HdrHistogram, IrradianceMap, extent_from_histogram,
                  hdr_histogram, log_mse, merge_hdr, read_histogram_csv,
                  write_histogram_csv)
from .pipeline import (BoundsSpec, RunConfig, SimSpec, auto_scene_scale,
                       baseline_bracket, baseline_extent, default_ladder,
                       full_ladder_selection, parse_ladder_spec, parse_sim_spec,
                       run_benchmark, run_select)
from .simulate import (ExposureLadder, LdrImage, RawImage, SceneIrradiance,
                       make_scene, simulate_capture, simulate_capture_raw,
                       sweep_stack, sweep_stack_raw)

__version__ = "0.1.0"

__all__ = [
    "CameraProfile", "NoiseModel", "ResponseFunction", "default_profile",
    "fit_noise_model", "fit_response", "gamma_response", "load_profile",
    "noise_sigma", "response_apply", "response_invert", "save_profile",
    "snr_db",
    "CaptureBounds", "CoverageInstance", "compute_imin", "coverage_intervals",
    "dump_instance", "estimate_imax", "grayscale", "grayscale_image",
    "load_instance", "parse_instance",
    "ReductionTrace", "Selection", "WeightedInstance", "brute_force",
    "load_selection", "reduce_instance", "save_selection", "solve_unit",
    "solve_weighted", "verify_cover",
    "ConfigError", "EstimationError", "FitError", "InfeasibleError",
    "MetricError",
    "HdrHistogram", "IrradianceMap", "extent_from_histogram", "hdr_histogram",
    "log_mse", "merge_hdr", "read_histogram_csv", "write_histogram_csv",
    "BoundsSpec", "RunConfig", "SimSpec", "auto_scene_scale",
    "baseline_bracket", "baseline_extent", "default_ladder",
    "full_ladder_selection", "parse_ladder_spec", "parse_sim_spec",
    "run_benchmark", "run_select",
    "ExposureLadder", "LdrImage", "RawImage", "SceneIrradiance", "make_scene",
    "simulate_capture", "simulate_capture_raw", "sweep_stack",
    "sweep_stack_raw",
    "__version__",
]
