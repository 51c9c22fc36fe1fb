"""
Propagation geometry, branch-resolved refractive and group indices, and the
effective nonlinear coefficient.

Angles are in degrees, wavelengths in micrometers, inverse group velocities in
fs/um and nonlinear coefficients in pm/V.
"""
import logging
import math
from dataclasses import dataclass, replace
from itertools import permutations
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .config import SPEED_OF_LIGHT
from .exceptions import GeometryError, UnsupportedPointGroupError, WavelengthRangeError
from .photons import (
    BIAXIAL_AXIS_BRANCHES,
    BIAXIAL_PLANE_BRANCHES,
    ISOTROPIC_BRANCHES,
    UNIAXIAL_BRANCHES,
    Interaction,
    PhotonTriple,
)
from .registry import CrystalRecord, NonlinearEntry

logger = logging.getLogger(__name__)

GEOMETRY_KINDS = ("bpm-uniaxial", "bpm-biaxial-plane", "qpm")
PLANES = ("xy", "xz", "yz")
ANGLE_SLACK = 1e-9

# (in-plane axis at angle 0, in-plane axis at angle 90, normal axis)
PLANE_AXES = {"xy": ("y", "x", "z"), "xz": ("x", "z", "y"), "yz": ("y", "z", "x")}


@dataclass(frozen=True)
class Geometry:
    """
    Collinear propagation geometry.

    BPM geometries carry the polar angle `theta` and azimuth `phi`; biaxial ones
    also fix a principal `plane` (xy varies phi at theta = 90, xz and yz vary theta
    at phi = 0 and 90). QPM geometries propagate along a principal axis and carry
    the poling `period` (um), the odd `order` and the grating orientation
    `grating_sign`, which selects whether the grating vector is subtracted (+1) or
    added (-1) in the phase mismatch. A QPM geometry without a period describes
    the bare crystal.
    """

    kind: str
    theta: float = 90.0
    phi: float = 0.0
    plane: Optional[str] = None
    period: Optional[float] = None
    order: int = 1
    grating_sign: int = 1

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise GeometryError(f"unknown geometry kind '{self.kind}'")
        for name in ("theta", "phi"):
            value = getattr(self, name)
            if not -ANGLE_SLACK <= value <= 90.0 + ANGLE_SLACK:
                raise GeometryError(f"{name} must lie in [0, 90] degrees, got {value}")
        if self.kind == "bpm-biaxial-plane":
            if self.plane not in PLANES:
                raise GeometryError(f"biaxial geometry needs a plane in {PLANES}, got {self.plane!r}")
            if self.plane == "xy" and abs(self.theta - 90.0) > ANGLE_SLACK:
                raise GeometryError("xy-plane propagation fixes theta = 90 degrees")
            if self.plane == "xz" and abs(self.phi) > ANGLE_SLACK:
                raise GeometryError("xz-plane propagation fixes phi = 0 degrees")
            if self.plane == "yz" and abs(self.phi - 90.0) > ANGLE_SLACK:
                raise GeometryError("yz-plane propagation fixes phi = 90 degrees")
        if self.kind == "qpm":
            if self.period is not None and not self.period > 0:
                raise GeometryError(f"poling period must be positive, got {self.period}")
            if self.order < 1 or self.order % 2 == 0:
                raise GeometryError(f"QPM order must be an odd positive integer, got {self.order}")
            if self.grating_sign not in (-1, 1):
                raise GeometryError("grating_sign must be +1 or -1")

    @classmethod
    def uniaxial(cls, theta: float, phi: float = 0.0) -> "Geometry":
        return cls("bpm-uniaxial", theta=theta, phi=phi)

    @classmethod
    def biaxial(cls, plane: str, angle: float) -> "Geometry":
        "Principal-plane geometry; `angle` is phi for xy and theta for xz/yz"
        if plane == "xy":
            return cls("bpm-biaxial-plane", theta=90.0, phi=angle, plane=plane)
        if plane == "xz":
            return cls("bpm-biaxial-plane", theta=angle, phi=0.0, plane=plane)
        if plane == "yz":
            return cls("bpm-biaxial-plane", theta=angle, phi=90.0, plane=plane)
        raise GeometryError(f"unknown principal plane {plane!r}")

    @classmethod
    def qpm(cls, period: Optional[float] = None, order: int = 1, grating_sign: int = 1) -> "Geometry":
        return cls("qpm", period=period, order=order, grating_sign=grating_sign)

    @classmethod
    def bpm(cls, plane: Optional[str], angle: float) -> "Geometry":
        "Uniaxial geometry when `plane` is None, principal-plane geometry otherwise"
        return cls.uniaxial(angle) if plane is None else cls.biaxial(plane, angle)

    @property
    def is_qpm(self) -> bool:
        return self.kind == "qpm"

    @property
    def angle(self) -> Optional[float]:
        "The phase-matching angle: theta, or phi in the xy plane; None for QPM"
        if self.kind == "qpm":
            return None
        return self.phi if self.plane == "xy" else self.theta

    @property
    def angle_name(self) -> Optional[str]:
        if self.kind == "qpm":
            return None
        return "phi" if self.plane == "xy" else "theta"

    def with_angle(self, angle: float) -> "Geometry":
        if self.kind == "bpm-uniaxial":
            return replace(self, theta=angle)
        if self.kind == "bpm-biaxial-plane":
            return Geometry.biaxial(self.plane, angle)
        raise GeometryError("QPM geometries have no phase-matching angle")

    def describe(self) -> Dict[str, object]:
        data = {"kind": self.kind}
        if self.is_qpm:
            data.update(period_um=self.period, order=self.order, grating_sign=self.grating_sign)
        else:
            data.update(theta_deg=self.theta, phi_deg=self.phi)
            if self.plane:
                data["plane"] = self.plane
        return data


def _valid_branches(record: CrystalRecord, kind: str) -> Tuple[str, ...]:
    if record.is_isotropic:
        return ISOTROPIC_BRANCHES
    if record.is_uniaxial:
        if kind == "bpm-biaxial-plane":
            raise GeometryError(f"{record.id} is uniaxial; principal-plane geometries need a biaxial crystal")
        return UNIAXIAL_BRANCHES
    if kind == "bpm-uniaxial":
        raise GeometryError(f"{record.id} is biaxial; use a principal-plane or QPM geometry")
    return BIAXIAL_PLANE_BRANCHES if kind == "bpm-biaxial-plane" else BIAXIAL_AXIS_BRANCHES


def check_branch(record: CrystalRecord, geometry: Geometry, branch: str) -> None:
    allowed = _valid_branches(record, geometry.kind)
    if branch not in allowed:
        raise GeometryError(
            f"branch '{branch}' is not valid for {record.id} ({record.optical_class}, {geometry.kind}); expected one of {allowed}"
        )


def _principal(record: CrystalRecord, axis: str, lam, check: bool = True):
    model = record.model(axis)
    try:
        return model.index_and_slope(lam, check)
    except WavelengthRangeError as exc:
        raise WavelengthRangeError(exc.wavelength, exc.window, f"{record.id} axis {axis}") from None


def _ellipse(n_a, dn_a, n_b, dn_b, angle_deg):
    """
    Index on the ellipse 1/n^2 = cos^2(a)/n_a^2 + sin^2(a)/n_b^2 and its wavelength
    derivative at fixed angle. Broadcasts over wavelength and angle arrays.
    """
    a = np.radians(angle_deg)
    c2, s2 = np.cos(a) ** 2, np.sin(a) ** 2
    inv = c2 / n_a ** 2 + s2 / n_b ** 2
    n = 1.0 / np.sqrt(inv)
    dn = n ** 3 * (c2 * dn_a / n_a ** 3 + s2 * dn_b / n_b ** 3)
    return n, dn


def branch_index_and_slope(
    record: CrystalRecord,
    kind: str,
    branch: str,
    lam,
    theta=90.0,
    phi=0.0,
    plane: Optional[str] = None,
    check: bool = True,
):
    """
    Vectorized core of `index_at`: refractive index and dn/d(lambda) for `branch`,
    broadcasting `lam` against the angle arrays. Angles are in degrees.
    """
    if record.is_isotropic:
        return _principal(record, "n", lam, check)
    if record.is_uniaxial:
        if branch == "o":
            return _principal(record, "o", lam, check)
        if kind == "qpm":
            return _principal(record, "e", lam, check)
        n_o, dn_o = _principal(record, "o", lam, check)
        n_e, dn_e = _principal(record, "e", lam, check)
        return _ellipse(n_o, dn_o, n_e, dn_e, theta)
    if kind == "qpm":
        return _principal(record, branch, lam, check)
    axis_0, axis_90, normal = PLANE_AXES[plane]
    if branch == "normal":
        return _principal(record, normal, lam, check)
    n_a, dn_a = _principal(record, axis_0, lam, check)
    n_b, dn_b = _principal(record, axis_90, lam, check)
    return _ellipse(n_a, dn_a, n_b, dn_b, phi if plane == "xy" else theta)


def index_and_slope(record: CrystalRecord, geometry: Geometry, branch: str, wavelength):
    check_branch(record, geometry, branch)
    return branch_index_and_slope(
        record, geometry.kind, branch, wavelength, geometry.theta, geometry.phi, geometry.plane
    )


def index_at(record: CrystalRecord, geometry: Geometry, branch: str, wavelength):
    """
    Refractive index seen by `branch` in `geometry` at `wavelength` (um).

    The uniaxial e-branch follows 1/n^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2;
    biaxial in-plane branches use the same ellipse between the two principal
    indices of the plane, and the normal branch sees the remaining principal
    index.
    """
    return index_and_slope(record, geometry, branch, wavelength)[0]


def group_index(record: CrystalRecord, geometry: Geometry, branch: str, wavelength):
    "n_g = n - lambda dn/d(lambda), with the derivative taken at fixed angles"
    n, dn = index_and_slope(record, geometry, branch, wavelength)
    return n - np.asarray(wavelength, dtype=float) * dn


def inverse_group_velocity(record: CrystalRecord, geometry: Geometry, branch: str, wavelength):
    "1/v_g in fs/um"
    return group_index(record, geometry, branch, wavelength) / SPEED_OF_LIGHT


def inverse_group_velocities(record: CrystalRecord, interaction: Interaction, geometry: Geometry, triple: PhotonTriple):
    "Pump, signal and idler inverse group velocities in fs/um"
    return tuple(
        float(inverse_group_velocity(record, geometry, branch, lam))
        for branch, lam in zip(interaction.branches, triple.as_tuple())
    )


# Nonlinear tensor

_VOIGT = {1: (0, 0), 2: (1, 1), 3: (2, 2), 4: (1, 2), 5: (0, 2), 6: (0, 1)}

_GROUP_3M = (
    (("d31", 1), ("d32", 1), ("d15", 1), ("d24", 1)),
    (("d22", 1), ("d21", -1), ("d16", -1)),
    (("d33", 1),),
)
_GROUP_62M = ((("d22", 1), ("d21", -1), ("d16", -1)),)
_GROUP_42M = ((("d14", 1), ("d25", 1), ("d36", 1)),)
_GROUP_4 = (
    (("d14", 1), ("d25", 1), ("d36", 1)),
    (("d31", 1), ("d15", 1), ("d32", -1), ("d24", -1)),
)
_GROUP_4MM = (
    (("d15", 1), ("d24", 1), ("d31", 1), ("d32", 1)),
    (("d33", 1),),
)
_GROUP_MM2 = (
    (("d15", 1), ("d31", 1)),
    (("d24", 1), ("d32", 1)),
    (("d33", 1),),
)

# Equality groups of the Kleinman-symmetric d tensor per point group. Every
# element in a group equals sign * (shared value).
POINT_GROUPS = {
    "3m": _GROUP_3M,
    "-62m": _GROUP_62M,
    "-6m2": _GROUP_62M,
    "-42m": _GROUP_42M,
    "-43m": _GROUP_42M,
    "-4": _GROUP_4,
    "4mm": _GROUP_4MM,
    "6mm": _GROUP_4MM,
    "4": _GROUP_4MM,
    "6": _GROUP_4MM,
    "mm2": _GROUP_MM2,
}

COEFFICIENT_TOL = 1e-9
GENERIC_AZIMUTHS = (0.0, 17.0, 31.0, 53.0, 79.0)


def _unit_tensor(group: Sequence[Tuple[str, int]]) -> np.ndarray:
    tensor = np.zeros((3, 3, 3))
    for label, sign in group:
        i = int(label[1]) - 1
        j, k = _VOIGT[int(label[2])]
        for index in set(permutations((i, j, k))):
            tensor[index] = sign
    return tensor


def polarization_vector(record: CrystalRecord, geometry: Geometry, branch: str) -> np.ndarray:
    "Unit electric-field direction of `branch` in crystal-physics axes"
    check_branch(record, geometry, branch)
    theta, phi = np.radians(geometry.theta), np.radians(geometry.phi)
    if record.is_isotropic:
        return np.array([0.0, 0.0, 1.0])
    if geometry.kind == "qpm":
        axis = {"o": "y", "e": "z"}.get(branch, branch)
        return np.eye(3)["xyz".index(axis)]
    if record.is_uniaxial:
        if branch == "o":
            return np.array([np.sin(phi), -np.cos(phi), 0.0])
        return np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
    plane = geometry.plane
    if branch == "normal":
        return np.eye(3)["xyz".index(PLANE_AXES[plane][2])]
    if plane == "xy":
        return np.array([-np.sin(phi), np.cos(phi), 0.0])
    if plane == "xz":
        return np.array([np.cos(theta), 0.0, -np.sin(theta)])
    return np.array([0.0, np.cos(theta), -np.sin(theta)])


def _pick_entry(entries: Sequence[NonlinearEntry], triple: PhotonTriple) -> NonlinearEntry:
    "Entry measured closest (log scale) to the geometric mean of the triple"
    target = math.log(triple.pump * triple.signal * triple.idler) / 3.0
    return min(entries, key=lambda e: abs(math.log(e.measurement_wavelength) - target))


def miller_factor(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    triple: PhotonTriple,
    measurement_wavelength: float,
) -> float:
    """
    Miller's-rule scaling of a coefficient measured at `measurement_wavelength`
    (degenerate convention) to the wavelengths of `triple`, with chi = n^2 - 1 on
    each wave's own branch. Returns 1 when the measurement wavelength lies outside
    the dispersion window.
    """
    numerator, denominator = 1.0, 1.0
    for branch, lam in zip(interaction.branches, triple.as_tuple()):
        try:
            chi_m = float(index_at(record, geometry, branch, measurement_wavelength)) ** 2 - 1.0
        except WavelengthRangeError:
            logger.warning(
                "%s: measurement wavelength %.4g um outside the dispersion window, Miller scaling skipped",
                record.id,
                measurement_wavelength,
            )
            return 1.0
        numerator *= float(index_at(record, geometry, branch, lam)) ** 2 - 1.0
        denominator *= chi_m
    return numerator / denominator


def qpm_factor(geometry: Geometry) -> float:
    "2/(m pi) reduction for order-m quasi-phase matching, 1 otherwise"
    return 2.0 / (geometry.order * math.pi) if geometry.is_qpm else 1.0


def _entries_for(record: CrystalRecord, group) -> list:
    signs = dict(group)
    return [e for e in record.d_entries if e.tensor_label in signs]


def _group_coefficients(record, interaction, geometry, groups) -> list:
    pump, signal, idler = (polarization_vector(record, geometry, b) for b in interaction.branches)
    return [float(np.einsum("ijk,i,j,k->", _unit_tensor(group), pump, signal, idler)) for group in groups]


def _needed_coefficients(record, interaction, geometry, groups) -> list:
    """
    Largest |coefficient| of each group over the geometry and, for uniaxial BPM,
    a set of generic azimuths at the same theta. A group that vanishes only at a
    nodal azimuth still needs its entry.
    """
    needed = [abs(c) for c in _group_coefficients(record, interaction, geometry, groups)]
    if geometry.kind == "bpm-uniaxial":
        for phi in GENERIC_AZIMUTHS:
            generic = replace(geometry, phi=phi)
            for i, c in enumerate(_group_coefficients(record, interaction, generic, groups)):
                needed[i] = max(needed[i], abs(c))
    return needed


def d_eff(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    triple: PhotonTriple,
) -> Optional[float]:
    """
    Effective nonlinear coefficient in pm/V, or None when it is unknown.

    The Kleinman-symmetric d tensor is assembled from the record's entries using
    the point-group equality pattern and contracted with the pump, signal and
    idler polarization vectors. Each entry is scaled to the interaction
    wavelengths with Miller's rule; QPM multiplies by 2/(m pi). A needed tensor
    element without an entry makes the result unknown.
    """
    if not record.d_eff_known or not record.d_entries:
        return None
    groups = POINT_GROUPS.get(record.point_group)
    if groups is None:
        raise UnsupportedPointGroupError(f"{record.id}: no d_eff table for point group '{record.point_group}'")

    if record.is_isotropic:
        entries = [e for e in record.d_entries if e.tensor_label in ("d14", "d25", "d36")]
        if not entries:
            return None
        entry = _pick_entry(entries, triple)
        scale = miller_factor(record, interaction, geometry, triple, entry.measurement_wavelength)
        return entry.magnitude * scale * qpm_factor(geometry)

    coefficients = _group_coefficients(record, interaction, geometry, groups)
    for group, coefficient in zip(groups, _needed_coefficients(record, interaction, geometry, groups)):
        if abs(coefficient) > COEFFICIENT_TOL and not _entries_for(record, group):
            logger.debug("%s: no entry for %s", record.id, "/".join(dict(group)))
            return None

    total = 0.0
    for group, coefficient in zip(groups, coefficients):
        if abs(coefficient) <= COEFFICIENT_TOL:
            continue
        signs = dict(group)
        entries = _entries_for(record, group)
        entry = _pick_entry(entries, triple)
        value = entry.magnitude * signs[entry.tensor_label]
        scale = miller_factor(record, interaction, geometry, triple, entry.measurement_wavelength)
        total += coefficient * value * scale
    return total * qpm_factor(geometry)


def best_azimuth(
    record: CrystalRecord,
    interaction: Interaction,
    theta: float,
    triple: PhotonTriple,
    step: float = 0.5,
) -> Tuple[float, Optional[float]]:
    """
    Azimuth (degrees) maximizing |d_eff| for uniaxial BPM at polar angle `theta`.
    Phase matching does not depend on phi, so only d_eff selects it. Returns
    (0, None) when d_eff is unknown.
    """
    best_phi, best_value = 0.0, None
    for phi in np.linspace(0.0, 90.0, int(round(90.0 / step)) + 1):
        value = d_eff(record, interaction, Geometry.uniaxial(theta, float(phi)), triple)
        if value is None:
            continue
        if best_value is None or abs(value) > abs(best_value) + 1e-15:
            best_phi, best_value = float(phi), value
    return best_phi, best_value
