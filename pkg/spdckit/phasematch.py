"""
Wave-vector mismatch, birefringent phase-matching angles, QPM poling periods and
nondegenerate phase-matching maps.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from .config import ANGLE_STEP_DEG, DELTA_K_TOL
from .exceptions import DegenerateGratingError, GeometryError, NoSolutionError
from .file_utils import matrix_frame, write_csv, write_json
from .geometry import Geometry, branch_index_and_slope, check_branch
from .model import PhaseMatcher
from .photons import Interaction, PhotonTriple
from .registry import CrystalRecord

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
ROOT_XTOL = 1e-13
ZERO_MISMATCH = 1e-15


def _angles(plane: Optional[str], angle):
    "(theta, phi) for the varying angle of a BPM geometry"
    if plane is None:
        return angle, 0.0
    if plane == "xy":
        return 90.0, angle
    if plane == "xz":
        return angle, 0.0
    return angle, 90.0


def mismatch_raw(
    record: CrystalRecord,
    interaction: Interaction,
    kind: str,
    pump,
    signal,
    idler,
    theta=90.0,
    phi=0.0,
    plane: Optional[str] = None,
    check: bool = True,
):
    """
    k_p - k_s - k_i in rad/um without any grating term. Broadcasts the wavelength
    arrays against the angle arrays.
    """
    total = 0.0
    for sign, branch, lam in ((1.0, interaction.pump, pump), (-1.0, interaction.signal, signal), (-1.0, interaction.idler, idler)):
        n, _ = branch_index_and_slope(record, kind, branch, lam, theta, phi, plane, check)
        total = total + sign * TWO_PI * n / np.asarray(lam, dtype=float)
    return total


def grating_vector(geometry: Geometry) -> float:
    "Signed grating wave vector 2 pi m / period subtracted from the mismatch"
    if not geometry.is_qpm or geometry.period is None:
        return 0.0
    return geometry.grating_sign * TWO_PI * geometry.order / geometry.period


def delta_k(record: CrystalRecord, interaction: Interaction, geometry: Geometry, triple: PhotonTriple) -> float:
    """
    Phase mismatch in rad/um: k_p - k_s - k_i for BPM, and k_p - k_s - k_i - 2 pi m /
    period for QPM (with the geometry's grating orientation).
    """
    for branch in interaction.branches:
        check_branch(record, geometry, branch)
    raw = mismatch_raw(
        record, interaction, geometry.kind, *triple.as_tuple(),
        theta=geometry.theta, phi=geometry.phi, plane=geometry.plane,
    )
    return float(raw) - grating_vector(geometry)


def _bpm_kind(record: CrystalRecord, interaction: Interaction, plane: Optional[str]) -> str:
    geometry = Geometry.bpm(plane, 45.0)
    for branch in interaction.branches:
        check_branch(record, geometry, branch)
    return geometry.kind


def scan_angles(step: float = ANGLE_STEP_DEG) -> np.ndarray:
    return np.linspace(0.0, 90.0, int(round(90.0 / step)) + 1)


def bracket_roots(x: np.ndarray, y: np.ndarray) -> List[Tuple[float, float]]:
    """
    Intervals of `x` over which `y` changes sign (NaN samples break brackets). An
    exact zero sample is returned as a zero-width interval.
    """
    brackets = []
    for i in range(len(x)):
        if y[i] == 0.0:
            brackets.append((float(x[i]), float(x[i])))
        elif i + 1 < len(x) and np.isfinite(y[i]) and np.isfinite(y[i + 1]) and y[i] * y[i + 1] < 0:
            brackets.append((float(x[i]), float(x[i + 1])))
    return brackets


def solve_bpm_angle(
    record: CrystalRecord,
    interaction: Interaction,
    plane: Optional[str],
    triple: PhotonTriple,
    step: float = ANGLE_STEP_DEG,
) -> List[float]:
    """
    All phase-matching angles in [0, 90] degrees, ascending.

    `plane` is None for uniaxial crystals (the angle is theta) or a principal plane
    of a biaxial crystal (phi for xy, theta for xz/yz). The mismatch is scanned in
    `step` increments and each sign change refined by bisection.
    """
    kind = _bpm_kind(record, interaction, plane)
    angles = scan_angles(step)
    theta, phi = _angles(plane, angles)
    scan = np.broadcast_to(
        mismatch_raw(record, interaction, kind, *triple.as_tuple(), theta=theta, phi=phi, plane=plane), angles.shape
    )

    def mismatch(angle: float) -> float:
        t, p = _angles(plane, angle)
        return float(mismatch_raw(record, interaction, kind, *triple.as_tuple(), theta=t, phi=p, plane=plane))

    roots: List[float] = []
    for a, b in bracket_roots(angles, scan):
        root = a if a == b else bisect(mismatch, a, b, xtol=ROOT_XTOL, maxiter=200)
        residual = mismatch(root)
        if abs(residual) >= DELTA_K_TOL:
            logger.warning("%s: phase-matching root at %.6f deg left |dk| = %.3e rad/um", record.id, root, abs(residual))
        if not roots or abs(root - roots[-1]) > 1e-9:
            roots.append(float(root))
    if not roots:
        raise NoSolutionError(
            f"{record.id}: no phase matching for {interaction} at {triple.as_tuple()} um",
            (float(np.nanmin(scan)), float(np.nanmax(scan))),
        )
    if len(roots) > 1:
        logger.info("%s: %d phase-matching angles at pump %.4f um: %s", record.id, len(roots), triple.pump, roots)
    return roots


def qpm_mismatch(record: CrystalRecord, interaction: Interaction, triple: PhotonTriple) -> float:
    "Bare-crystal mismatch k_p - k_s - k_i for propagation along a principal axis"
    return delta_k(record, interaction, Geometry.qpm(), triple)


def poling_period(record: CrystalRecord, interaction: Interaction, triple: PhotonTriple, order: int = 1) -> float:
    """
    First-order (or order-m) poling period in um: 2 pi m / |k_p - k_s - k_i|.

    Raises `DegenerateGratingError` when the bare mismatch vanishes.
    """
    mismatch = qpm_mismatch(record, interaction, triple)
    if abs(mismatch) < ZERO_MISMATCH:
        raise DegenerateGratingError(f"{record.id}: zero phase mismatch at {triple.as_tuple()} um, period is infinite")
    return TWO_PI * order / abs(mismatch)


def qpm_geometry(record: CrystalRecord, interaction: Interaction, triple: PhotonTriple, order: int = 1) -> Geometry:
    "QPM geometry whose grating exactly compensates the mismatch of `triple`"
    mismatch = qpm_mismatch(record, interaction, triple)
    if abs(mismatch) < ZERO_MISMATCH:
        raise DegenerateGratingError(f"{record.id}: zero phase mismatch at {triple.as_tuple()} um, period is infinite")
    return Geometry.qpm(TWO_PI * order / abs(mismatch), order, 1 if mismatch > 0 else -1)


@dataclass
class PhaseMatchMap:
    """
    First-order poling period and ridge angle over a (pump, signal) grid.
    Rows follow `pump_axis`, columns `signal_axis`; NaN marks absent points
    (idler outside transparency, or signal not longer than pump).
    """

    crystal_id: str
    interaction: Interaction
    pump_axis: np.ndarray
    signal_axis: np.ndarray
    period: np.ndarray
    theta_pmf: np.ndarray
    singular: np.ndarray = field(default=None)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.period.shape

    def metadata(self) -> Dict[str, object]:
        return {
            "crystal": self.crystal_id,
            "interaction": str(self.interaction),
            "pump_range_um": [float(self.pump_axis[0]), float(self.pump_axis[-1])],
            "signal_range_um": [float(self.signal_axis[0]), float(self.signal_axis[-1])],
            "grid": list(self.shape),
            "units": {"wavelength": "um", "period": "um", "theta_pmf": "deg"},
            "singular_points": [
                [float(self.pump_axis[i]), float(self.signal_axis[j])] for i, j in zip(*np.nonzero(self.singular))
            ],
        }

    def save(self, directory: Union[str, Path], stem: str) -> List[Path]:
        "Write `<stem>_period.csv`, `<stem>_theta_pmf.csv` and `<stem>.json`"
        directory = Path(directory)
        return [
            write_csv(matrix_frame(self.period, self.pump_axis, self.signal_axis, "pump_um"), directory / f"{stem}_period.csv", index=True),
            write_csv(matrix_frame(self.theta_pmf, self.pump_axis, self.signal_axis, "pump_um"), directory / f"{stem}_theta_pmf.csv", index=True),
            write_json(self.metadata(), directory / f"{stem}.json"),
        ]


def pm_map(
    record: CrystalRecord,
    interaction: Interaction,
    pump_range: Tuple[float, float],
    signal_range: Tuple[float, float],
    grid: Union[int, Sequence[int]] = (50, 50),
) -> PhaseMatchMap:
    """
    Poling period and ridge angle for every (pump, signal) pair of a uniform grid,
    with the idler fixed by energy conservation. `grid` is the number of pump and
    signal samples (an int applies to both).
    """
    from .gvm import theta_pmf

    n_pump, n_signal = (grid, grid) if isinstance(grid, int) else tuple(grid)
    pumps = np.linspace(pump_range[0], pump_range[1], n_pump)
    signals = np.linspace(signal_range[0], signal_range[1], n_signal)
    period = np.full((n_pump, n_signal), np.nan)
    angle = np.full((n_pump, n_signal), np.nan)
    singular = np.zeros((n_pump, n_signal), dtype=bool)
    for i, lp in enumerate(pumps):
        for j, ls in enumerate(signals):
            if ls <= lp:
                continue
            triple = PhotonTriple.from_pump_signal(float(lp), float(ls))
            if not all(record.transparency_check(triple.as_tuple())):
                continue
            try:
                period[i, j] = poling_period(record, interaction, triple)
            except DegenerateGratingError:
                pass
            ridge = theta_pmf(record, interaction, Geometry.qpm(), triple)
            angle[i, j] = ridge.degrees
            singular[i, j] = ridge.singular
    logger.info("%s: phase-matching map %dx%d, %d points absent", record.id, n_pump, n_signal, int(np.isnan(period).sum()))
    return PhaseMatchMap(record.id, interaction, pumps, signals, period, angle, singular)


class BirefringentPhaseMatcher(PhaseMatcher):
    """
    Birefringent phase matching for one crystal: angle solving and GVM searches in
    the crystal's configured principal plane (biaxial) or in theta (uniaxial).
    """

    def __init__(self, record: CrystalRecord, interaction: Optional[Interaction] = None, plane: Optional[str] = None):
        super().__init__(record, interaction)
        if plane is None and record.interaction is not None:
            plane = record.interaction.plane
        if record.is_biaxial and plane is None:
            raise GeometryError(f"{record.id} is biaxial; a principal plane is required")
        self.plane = plane

    def geometry(self, angle: float) -> Geometry:
        return Geometry.bpm(self.plane, angle)

    def delta_k(self, geometry: Geometry, triple: PhotonTriple) -> float:
        return delta_k(self.record, self.interaction, geometry, triple)

    def phase_match(self, triple: PhotonTriple) -> List[float]:
        return solve_bpm_angle(self.record, self.interaction, self.plane, triple)

    def solve_gvm(self, condition: str, pump_range=None):
        from .gvm import solve_gvm_bpm

        return solve_gvm_bpm(self.record, self.interaction, self.plane, condition, pump_range)


class QuasiPhaseMatcher(PhaseMatcher):
    """
    Quasi-phase matching for one crystal with an order-`order` grating.
    """

    def __init__(self, record: CrystalRecord, interaction: Optional[Interaction] = None, order: int = 1):
        super().__init__(record, interaction)
        self.order = order

    def delta_k(self, geometry: Geometry, triple: PhotonTriple) -> float:
        return delta_k(self.record, self.interaction, geometry, triple)

    def phase_match(self, triple: PhotonTriple) -> Geometry:
        return qpm_geometry(self.record, self.interaction, triple, self.order)

    def poling_period(self, triple: PhotonTriple) -> float:
        return poling_period(self.record, self.interaction, triple, self.order)

    def solve_gvm(self, condition: str, pump_range=None):
        from .gvm import solve_gvm_qpm

        return solve_gvm_qpm(self.record, self.interaction, condition, pump_range, order=self.order)


def phase_matcher_for(record: CrystalRecord, interaction: Optional[Interaction] = None) -> PhaseMatcher:
    "Matcher for the record's default phase-matching method"
    if record.interaction is None:
        raise ValueError(f"{record.id} has no default interaction")
    if record.interaction.method == "qpm":
        return QuasiPhaseMatcher(record, interaction)
    return BirefringentPhaseMatcher(record, interaction)
