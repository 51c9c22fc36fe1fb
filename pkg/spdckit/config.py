"""
Constants and defaults shared across spdckit.

Units everywhere: micrometers (wavelength, poling period), femtoseconds (time),
rad/fs (angular frequency), rad/um (wave vectors), fs/um (inverse group velocity).
"""
import os
from pathlib import Path

import pkg_resources

# Speed of light in um/fs
SPEED_OF_LIGHT = 0.299792458

# Root finding
ANGLE_STEP_DEG = 0.1
PUMP_STEP_UM = 0.01
DELTA_K_TOL = 1e-8
GVM_TOL = 1e-6
SINGULAR_TOL = 1e-12

# JSA grids
DEFAULT_GRID_SIZE = 200
MIN_GRID_SIZE = 16
BOUNDARY_LEVEL = 1e-3
MAX_SPAN_FACTOR = 40.0
EDGE_SAMPLES = 201

# HOM delay sweeps
DEFAULT_DELAY_POINTS = 201

# Crystal length (mm) and pump bandwidth parameter (nm) used for predicted purity.
# GVM3 uses a bandwidth matched to the phase-matching width, so only L is fixed.
SOURCE_SETTINGS = {
    "GVM1": {"length_mm": 100.0, "pump_bw_nm": 4.0},
    "GVM2": {"length_mm": 200.0, "pump_bw_nm": 8.0},
    "GVM3": {"length_mm": 100.0, "pump_bw_nm": None},
}

REGISTRY_ENV_VAR = "SPDCKIT_REGISTRY"


def bundled_registry_path() -> Path:
    return Path(pkg_resources.resource_filename("spdckit", "data/crystals.yaml"))


def registry_path(path=None) -> Path:
    """Resolve the registry file: explicit path, then `$SPDCKIT_REGISTRY`, then the bundled file"""
    if path is not None:
        return Path(path)
    env = os.environ.get(REGISTRY_ENV_VAR)
    if env:
        return Path(env)
    return bundled_registry_path()
