"""
Group-velocity matching: residuals, the phase-matching ridge angle and joint
solvers for degenerate type-II (or type-0) sources.

Inverse group velocities are in fs/um. With g1 = 1/v_p - 1/v_s and
g2 = 1/v_p - 1/v_i the three conditions are GVM1: g1 = 0, GVM2: g2 = 0 and
GVM3: g1 + g2 = 0, which orient the phase-matching ridge at 0, 90 and 45 degrees.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from fastcore.basics import store_attr
from scipy.optimize import bisect

from .config import DELTA_K_TOL, GVM_TOL, PUMP_STEP_UM, SINGULAR_TOL, SPEED_OF_LIGHT
from .exceptions import NoSolutionError, SpdcError
from .geometry import Geometry, best_azimuth, branch_index_and_slope, d_eff, inverse_group_velocities
from .phasematch import (
    _angles,
    _bpm_kind,
    bracket_roots,
    delta_k,
    mismatch_raw,
    phase_matcher_for,
    qpm_geometry,
    scan_angles,
    solve_bpm_angle,
)
from .photons import Interaction, PhotonTriple
from .registry import CrystalRecord, CrystalRegistry, load_registry

logger = logging.getLogger(__name__)

CONDITIONS = ("GVM1", "GVM2", "GVM3")
TARGET_ANGLES = {"GVM1": 0.0, "GVM2": 90.0, "GVM3": 45.0}
ANGLE_CHECK_DEG = 0.5
RIDGE_WRAP_DEG = 1e-4
PUMP_XTOL = 1e-10

# Gaussian approximation sinc(x) ~ exp(-GAMMA x^2)
GAMMA = 0.193


class RidgeAngle(NamedTuple):
    "Ridge orientation in degrees in [0, 180); `singular` marks the all-GVM point"

    degrees: float
    singular: bool


def _check_condition(condition: str) -> str:
    condition = condition.upper()
    if condition not in CONDITIONS:
        raise ValueError(f"unknown GVM condition '{condition}', expected one of {CONDITIONS}")
    return condition


def _combine(g1, g2, condition: str):
    if condition == "GVM1":
        return g1
    if condition == "GVM2":
        return g2
    return g1 + g2


def gvm_terms(record: CrystalRecord, interaction: Interaction, geometry: Geometry, triple: PhotonTriple) -> Tuple[float, float]:
    "(g1, g2) = (1/v_p - 1/v_s, 1/v_p - 1/v_i) in fs/um"
    ip, is_, ii = inverse_group_velocities(record, interaction, geometry, triple)
    return ip - is_, ip - ii


def gvm_residual(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    triple: PhotonTriple,
    condition: str,
) -> float:
    """
    GVM1: 1/v_p - 1/v_s; GVM2: 1/v_p - 1/v_i; GVM3: 2/v_p - 1/v_s - 1/v_i, all in
    fs/um. The GVM3 residual is computed as the sum of the other two.
    """
    condition = _check_condition(condition)
    g1, g2 = gvm_terms(record, interaction, geometry, triple)
    return _combine(g1, g2, condition)


def ridge_angle(g1: float, g2: float, tol: float = SINGULAR_TOL) -> RidgeAngle:
    """
    atan2(-g1, g2) mapped to [0, 180) degrees; singular when both terms are below
    `tol`. A single term below `tol` counts as zero, so a converged GVM1 ridge is 0
    and a converged GVM2 ridge is 90.
    """
    if abs(g1) < tol and abs(g2) < tol:
        return RidgeAngle(float("nan"), True)
    g1 = 0.0 if abs(g1) < tol else g1
    g2 = 0.0 if abs(g2) < tol else g2
    degrees = math.degrees(math.atan2(-g1, g2)) % 180.0
    # 180 - eps and 0 are the same line
    if degrees > 180.0 - RIDGE_WRAP_DEG:
        degrees = 0.0
    return RidgeAngle(degrees, False)


def theta_pmf(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    triple: PhotonTriple,
    tol: float = SINGULAR_TOL,
) -> RidgeAngle:
    """
    Orientation of the phase-matching ridge in the (signal, idler) frequency plane,
    0 degrees along the signal axis.
    """
    return ridge_angle(*gvm_terms(record, interaction, geometry, triple), tol=tol)


@dataclass(frozen=True)
class GvmSolution:
    """
    One solved GVM condition: the degenerate triple, the phase-matched geometry
    (angle or poling period), the ridge angle and the effective nonlinearity.
    `residual` is the GVM residual (fs/um) and `mismatch` the phase mismatch
    (rad/um) at the stored geometry.
    """

    crystal_id: str
    method: str
    condition: str
    interaction: Interaction
    triple: PhotonTriple
    geometry: Geometry
    theta_pmf: RidgeAngle
    d_eff: Optional[float]
    residual: float
    mismatch: float
    predicted_purity: Optional[float] = None

    @property
    def singular(self) -> bool:
        return self.theta_pmf.singular

    @property
    def angle(self) -> Optional[float]:
        return self.geometry.angle

    @property
    def period(self) -> Optional[float]:
        return self.geometry.period

    def violations(self) -> List[str]:
        "Broken solution invariants, empty when the solution is consistent"
        problems = []
        if abs(self.mismatch) >= DELTA_K_TOL:
            problems.append(f"|dk| = {abs(self.mismatch):.3e} rad/um")
        if abs(self.residual) >= GVM_TOL:
            problems.append(f"GVM residual {self.residual:.3e} fs/um")
        if not self.singular:
            target = TARGET_ANGLES[self.condition]
            off = abs((self.theta_pmf.degrees - target + 90.0) % 180.0 - 90.0)
            if off > ANGLE_CHECK_DEG:
                problems.append(f"theta_PMF {self.theta_pmf.degrees:.3f} deg, expected {target:.0f}")
        return problems

    def with_purity(self, purity: Optional[float]) -> "GvmSolution":
        return replace(self, predicted_purity=purity)

    def as_row(self) -> Dict[str, object]:
        return {
            "crystal": self.crystal_id,
            "method": self.method,
            "condition": self.condition,
            "status": "ok",
            "pump_nm": self.triple.pump * 1e3,
            "signal_nm": self.triple.signal * 1e3,
            "idler_nm": self.triple.idler * 1e3,
            "angle_name": self.geometry.angle_name or "",
            "angle_deg": self.angle,
            "period_um": self.period,
            "theta_pmf_deg": self.theta_pmf.degrees,
            "singular": self.singular,
            "d_eff_pm_per_V": self.d_eff,
            "purity": self.predicted_purity,
        }


def degenerate_window(record: CrystalRecord, pump_range: Optional[Tuple[float, float]] = None) -> Tuple[float, float]:
    """
    Pump wavelengths for which the degenerate triple stays transparent, narrowed
    by the record's `gvm_search` window and `pump_range`.
    """
    lo, hi = record.transparency
    hi = hi / 2.0
    for window in (record.gvm_search, pump_range):
        if window is not None:
            lo, hi = max(lo, window[0]), min(hi, window[1])
    if not lo < hi:
        raise NoSolutionError(f"{record.id}: empty pump search window [{lo:.4g}, {hi:.4g}] um")
    return lo, hi


def pump_grid(window: Tuple[float, float], step: float = PUMP_STEP_UM) -> np.ndarray:
    lo, hi = window
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    grid = lo + step * np.arange(count)
    if hi - grid[-1] > 1e-9:
        grid = np.append(grid, hi)
    return grid


def _first_roots(angles: np.ndarray, scan: np.ndarray) -> np.ndarray:
    "Linear estimate of the first sign change along each row, NaN where none"
    left, right = scan[:, :-1], scan[:, 1:]
    change = (left == 0) | (left * right < 0)
    has = change.any(axis=1)
    first = np.argmax(change, axis=1)
    rows = np.arange(scan.shape[0])
    a, b = left[rows, first], right[rows, first]
    with np.errstate(divide="ignore", invalid="ignore"):
        fraction = np.where(a == b, 0.0, a / (a - b))
    estimate = angles[first] + (angles[first + 1] - angles[first]) * fraction
    return np.where(has, estimate, np.nan)


def _coarse_bpm_residuals(
    record: CrystalRecord,
    interaction: Interaction,
    plane: Optional[str],
    kind: str,
    condition: str,
    pumps: np.ndarray,
) -> np.ndarray:
    angles = scan_angles()
    lp = pumps[:, None]
    theta, phi = _angles(plane, angles[None, :])
    scan = np.broadcast_to(
        mismatch_raw(record, interaction, kind, lp, 2 * lp, 2 * lp, theta=theta, phi=phi, plane=plane),
        (len(pumps), len(angles)),
    )
    estimate = _first_roots(angles, scan)
    ok = np.isfinite(estimate)
    residual = np.full(len(pumps), np.nan)
    if not ok.any():
        return residual
    theta_r, phi_r = _angles(plane, estimate[ok])
    inverse = []
    for branch, lam in zip(interaction.branches, (pumps[ok], 2 * pumps[ok], 2 * pumps[ok])):
        n, dn = branch_index_and_slope(record, kind, branch, lam, theta_r, phi_r, plane)
        inverse.append((n - lam * dn) / SPEED_OF_LIGHT)
    g1, g2 = inverse[0] - inverse[1], inverse[0] - inverse[2]
    residual[ok] = _combine(g1, g2, condition)
    return residual


def with_predicted_purity(record: CrystalRecord, solution: GvmSolution) -> GvmSolution:
    "Attach the Schmidt purity of the default source; left empty when it cannot be computed"
    from .jsa import predicted_purity

    try:
        return solution.with_purity(predicted_purity(record, solution))
    except SpdcError as exc:
        logger.warning("%s %s: no predicted purity: %s", record.id, solution.condition, exc)
        return solution


def _finish(
    record: CrystalRecord,
    method: str,
    condition: str,
    interaction: Interaction,
    triple: PhotonTriple,
    geometry: Geometry,
    purity: bool,
) -> GvmSolution:
    g1, g2 = gvm_terms(record, interaction, geometry, triple)
    if method == "bpm" and record.is_uniaxial:
        phi, value = best_azimuth(record, interaction, geometry.theta, triple)
        geometry = Geometry.uniaxial(geometry.theta, phi)
    else:
        value = d_eff(record, interaction, geometry, triple)
    solution = GvmSolution(
        crystal_id=record.id,
        method=method,
        condition=condition,
        interaction=interaction,
        triple=triple,
        geometry=geometry,
        theta_pmf=ridge_angle(g1, g2, tol=GVM_TOL),
        d_eff=value,
        residual=_combine(g1, g2, condition),
        mismatch=delta_k(record, interaction, geometry, triple),
    )
    for problem in solution.violations():
        logger.warning("%s %s: %s", record.id, condition, problem)
    if purity:
        solution = with_predicted_purity(record, solution)
    logger.info(
        "%s %s: pump %.1f nm, %s",
        record.id,
        condition,
        triple.pump * 1e3,
        f"period {geometry.period:.4g} um" if geometry.is_qpm else f"{geometry.angle_name} {geometry.angle:.2f} deg",
    )
    return solution


def solve_gvm_bpm(
    record: CrystalRecord,
    interaction: Interaction,
    plane: Optional[str],
    condition: str,
    pump_range: Optional[Tuple[float, float]] = None,
    purity: bool = False,
) -> GvmSolution:
    """
    Degenerate birefringent solution of `condition`: the pump wavelength where the
    GVM residual vanishes at the (first) phase-matching angle.

    Pump wavelengths are scanned in 10 nm steps; every candidate sign change is
    confirmed with exact angle solves at both ends, then refined by bisection.
    """
    condition = _check_condition(condition)
    kind = _bpm_kind(record, interaction, plane)
    pumps = pump_grid(degenerate_window(record, pump_range))
    coarse = _coarse_bpm_residuals(record, interaction, plane, kind, condition, pumps)
    if not np.isfinite(coarse).any():
        raise NoSolutionError(
            f"{record.id}: {interaction} does not phase-match between {pumps[0]:.4g} and {pumps[-1]:.4g} um"
        )

    def exact(pump: float) -> Tuple[float, Geometry]:
        triple = PhotonTriple.degenerate(pump)
        angle = solve_bpm_angle(record, interaction, plane, triple)[0]
        geometry = Geometry.bpm(plane, angle)
        return gvm_residual(record, interaction, geometry, triple, condition), geometry

    for a, b in bracket_roots(pumps, coarse):
        try:
            fa, geometry = exact(a)
            if a == b or fa == 0.0:
                return _finish(record, "bpm", condition, interaction, PhotonTriple.degenerate(a), geometry, purity)
            fb, _ = exact(b)
        except NoSolutionError:
            logger.debug("%s: bracket [%.4f, %.4f] lost phase matching", record.id, a, b)
            continue
        if fa * fb > 0:
            logger.debug("%s: coarse bracket [%.4f, %.4f] not confirmed", record.id, a, b)
            continue
        root = bisect(lambda x: exact(x)[0], a, b, xtol=PUMP_XTOL, maxiter=200)
        _, geometry = exact(root)
        return _finish(record, "bpm", condition, interaction, PhotonTriple.degenerate(root), geometry, purity)
    raise NoSolutionError(
        f"{record.id}: {condition} not satisfied between {pumps[0]:.4g} and {pumps[-1]:.4g} um",
        (float(np.nanmin(coarse)), float(np.nanmax(coarse))),
    )


def solve_gvm_qpm(
    record: CrystalRecord,
    interaction: Interaction,
    condition: str,
    pump_range: Optional[Tuple[float, float]] = None,
    purity: bool = False,
    order: int = 1,
) -> GvmSolution:
    """
    Degenerate quasi-phase-matched solution of `condition`. Group velocities do not
    depend on the grating, so the residual is root-found over the pump wavelength
    alone and the poling period follows from the mismatch at the root.
    """
    condition = _check_condition(condition)
    pumps = pump_grid(degenerate_window(record, pump_range))
    inverse = []
    for branch, lam in zip(interaction.branches, (pumps, 2 * pumps, 2 * pumps)):
        n, dn = branch_index_and_slope(record, "qpm", branch, lam)
        inverse.append((n - lam * dn) / SPEED_OF_LIGHT)
    coarse = _combine(inverse[0] - inverse[1], inverse[0] - inverse[2], condition)
    bare = Geometry.qpm()

    def residual(pump: float) -> float:
        return gvm_residual(record, interaction, bare, PhotonTriple.degenerate(pump), condition)

    brackets = bracket_roots(pumps, coarse)
    if not brackets:
        raise NoSolutionError(
            f"{record.id}: {condition} not satisfied between {pumps[0]:.4g} and {pumps[-1]:.4g} um",
            (float(np.min(coarse)), float(np.max(coarse))),
        )
    a, b = brackets[0]
    root = a if a == b else bisect(residual, a, b, xtol=PUMP_XTOL, maxiter=200)
    triple = PhotonTriple.degenerate(root)
    geometry = qpm_geometry(record, interaction, triple, order)
    return _finish(record, "qpm", condition, interaction, triple, geometry, purity)


def solve_gvm(
    record: CrystalRecord,
    condition: str,
    interaction: Optional[Interaction] = None,
    pump_range: Optional[Tuple[float, float]] = None,
    purity: bool = False,
) -> GvmSolution:
    "Solve `condition` with the record's default method, plane and (unless given) interaction"
    spec = record.interaction
    if spec is None:
        raise ValueError(f"{record.id} has no default interaction")
    interaction = interaction or spec.interaction
    if spec.method == "qpm":
        return solve_gvm_qpm(record, interaction, condition, pump_range, purity)
    return solve_gvm_bpm(record, interaction, spec.plane, condition, pump_range, purity)


def matched_pump_bandwidth(record: CrystalRecord, solution: GvmSolution, length_mm: float) -> float:
    """
    Pump bandwidth parameter (um) whose envelope width along the anti-diagonal
    equals the Gaussian-approximated phase-matching width of a GVM3 source of
    length `length_mm`, so that the joint amplitude is circular.
    """
    g1, g2 = gvm_terms(record, solution.interaction, solution.geometry, solution.triple)
    g = max(abs(g1), abs(g2))
    if g < GVM_TOL:
        raise NoSolutionError(f"{record.id}: no group-velocity mismatch to match the pump to")
    sigma = math.sqrt(2.0 / GAMMA) / (g * length_mm * 1e3)
    two_pi_c = 2.0 * math.pi * SPEED_OF_LIGHT
    pump = solution.triple.pump
    return (-two_pi_c + math.sqrt(two_pi_c ** 2 + sigma ** 2 * pump ** 2)) / (sigma / 2.0)


class EasyGVMSolver:
    """
    Solve GVM conditions for crystals of a registry by id.

    Phase matchers are cached per crystal; conditions that cannot be satisfied
    come back as `None` rather than raising.
    """

    def __init__(self, registry: Optional[CrystalRegistry] = None, purity: bool = False):
        store_attr("purity")
        self.registry = load_registry() if registry is None else registry
        self.matchers = {}

    def matcher(self, crystal_id: str):
        if crystal_id not in self.matchers:
            self.matchers[crystal_id] = phase_matcher_for(self.registry[crystal_id])
        return self.matchers[crystal_id]

    def solve(
        self,
        crystal_id: str,
        condition: str,
        pump_range: Optional[Tuple[float, float]] = None,
    ) -> Optional[GvmSolution]:
        matcher = self.matcher(crystal_id)
        try:
            solution = matcher.solve_gvm(condition, pump_range)
        except NoSolutionError as exc:
            logger.info("%s %s not satisfied: %s", crystal_id, condition, exc)
            return None
        if self.purity:
            solution = with_predicted_purity(matcher.record, solution)
        return solution

    def solve_all(self, crystal_id: str, conditions=CONDITIONS) -> Dict[str, Optional[GvmSolution]]:
        return {condition: self.solve(crystal_id, condition) for condition in conditions}
