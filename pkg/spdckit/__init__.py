import pkg_resources

# Registry and optics
from .registry import CrystalRecord, CrystalRegistry, load_registry, dump_registry, default_registry
from .photons import PhotonTriple, Interaction
from .geometry import Geometry, index_at, group_index, inverse_group_velocity, d_eff, best_azimuth

# Phase matching and group-velocity matching
from .phasematch import (
    BirefringentPhaseMatcher,
    QuasiPhaseMatcher,
    PhaseMatchMap,
    delta_k,
    solve_bpm_angle,
    poling_period,
    pm_map,
    phase_matcher_for,
)
from .gvm import EasyGVMSolver, GvmSolution, gvm_residual, theta_pmf, solve_gvm, solve_gvm_bpm, solve_gvm_qpm

# Spectra and interference
from .jsa import PumpSpec, GridSpec, JSAGrid, build_jsa, marginals_fwhm, schmidt_purity, predicted_purity
from .hom import HOMTrace, two_fold_trace, four_fold_trace, extract_visibility_fwhm
from .survey import survey

__version__ = (
    pkg_resources.resource_string("spdckit", "VERSION.txt").decode("UTF-8").strip()
)

__all__ = [
    "__version__",
    "CrystalRecord",
    "CrystalRegistry",
    "load_registry",
    "dump_registry",
    "default_registry",
    "PhotonTriple",
    "Interaction",
    "Geometry",
    "index_at",
    "group_index",
    "inverse_group_velocity",
    "d_eff",
    "best_azimuth",
    "BirefringentPhaseMatcher",
    "QuasiPhaseMatcher",
    "PhaseMatchMap",
    "delta_k",
    "solve_bpm_angle",
    "poling_period",
    "pm_map",
    "phase_matcher_for",
    "EasyGVMSolver",
    "GvmSolution",
    "gvm_residual",
    "theta_pmf",
    "solve_gvm",
    "solve_gvm_bpm",
    "solve_gvm_qpm",
    "PumpSpec",
    "GridSpec",
    "JSAGrid",
    "build_jsa",
    "marginals_fwhm",
    "schmidt_purity",
    "predicted_purity",
    "HOMTrace",
    "two_fold_trace",
    "four_fold_trace",
    "extract_visibility_fwhm",
    "survey",
]
