"""
Joint spectral amplitudes of degenerate SPDC sources: pump envelope,
phase-matching function, JSA grids, marginal spectra and Schmidt purity.

Grids are uniform in wavelength. `amplitude[i, j]` belongs to signal wavelength
`signal_axis[i]` (rows) and idler wavelength `idler_axis[j]` (columns). The
spectral phase is flat, so amplitudes are real.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd

from .config import (
    BOUNDARY_LEVEL,
    DEFAULT_GRID_SIZE,
    MAX_SPAN_FACTOR,
    MIN_GRID_SIZE,
    EDGE_SAMPLES,
    SOURCE_SETTINGS,
    SPEED_OF_LIGHT,
)
from .exceptions import GridError, UndefinedPurityError
from .file_utils import matrix_frame, write_csv, write_json
from .geometry import Geometry, check_branch
from .phasematch import grating_vector, mismatch_raw
from .photons import Interaction
from .registry import CrystalRecord

logger = logging.getLogger(__name__)

TWO_PI_C = 2.0 * math.pi * SPEED_OF_LIGHT
SPAN_GROWTH = 1.25
START_FRACTION = 0.1
FWHM_PER_SIGMA = 2.0 * math.sqrt(math.log(2.0))


def angular_frequency(wavelength):
    "omega = 2 pi c / lambda in rad/fs"
    return TWO_PI_C / np.asarray(wavelength, dtype=float)


@dataclass(frozen=True)
class PumpSpec:
    """
    Gaussian pump centred at `wavelength` (um) with bandwidth parameter
    `bandwidth` (um). The intensity FWHM in wavelength is about 1.67 * bandwidth.
    """

    wavelength: float
    bandwidth: float

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength}")
        if not 0 < self.bandwidth < self.wavelength:
            raise ValueError(f"pump bandwidth must lie in (0, {self.wavelength}) um, got {self.bandwidth}")
        if self.bandwidth > 0.1 * self.wavelength:
            logger.warning("pump bandwidth %.4g um is not small against %.4g um", self.bandwidth, self.wavelength)

    @classmethod
    def from_nm(cls, wavelength_nm: float, bandwidth_nm: float) -> "PumpSpec":
        return cls(wavelength_nm * 1e-3, bandwidth_nm * 1e-3)

    @property
    def center_frequency(self) -> float:
        return TWO_PI_C / self.wavelength

    @property
    def sigma(self) -> float:
        "Amplitude width in rad/fs: the frequency spread of lambda_p -/+ bandwidth/2"
        lam, dl = self.wavelength, self.bandwidth
        return TWO_PI_C * dl / (lam ** 2 - dl ** 2 / 4.0)

    @property
    def intensity_fwhm(self) -> float:
        "Intensity FWHM in rad/fs"
        return FWHM_PER_SIGMA * self.sigma

    def mapped_fwhm(self, wavelength: float) -> float:
        "Pump intensity FWHM expressed as a wavelength width at `wavelength`"
        return wavelength ** 2 * self.intensity_fwhm / TWO_PI_C


def pump_envelope(pump: PumpSpec, signal, idler):
    "exp(-((w_s + w_i - w_p0) / sigma_p)^2 / 2), broadcasting the wavelength arrays"
    detuning = angular_frequency(signal) + angular_frequency(idler) - pump.center_frequency
    return np.exp(-0.5 * (detuning / pump.sigma) ** 2)


def mismatch_grid(record: CrystalRecord, interaction: Interaction, geometry: Geometry, signal, idler):
    "Phase mismatch (rad/um) with the pump fixed by energy conservation"
    signal = np.asarray(signal, dtype=float)
    idler = np.asarray(idler, dtype=float)
    pump = 1.0 / (1.0 / signal + 1.0 / idler)
    raw = mismatch_raw(
        record, interaction, geometry.kind, pump, signal, idler,
        theta=geometry.theta, phi=geometry.phi, plane=geometry.plane,
    )
    return raw - grating_vector(geometry)


def phase_matching_function(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    length_mm: float,
    signal,
    idler,
):
    "sinc(dk L / 2) with sinc(x) = sin(x)/x; `length_mm` in millimeters"
    if not length_mm > 0:
        raise ValueError(f"crystal length must be positive, got {length_mm} mm")
    for branch in interaction.branches:
        check_branch(record, geometry, branch)
    half_phase = mismatch_grid(record, interaction, geometry, signal, idler) * length_mm * 1e3 / 2.0
    return np.sinc(half_phase / math.pi)


@dataclass(frozen=True)
class GridSpec:
    """
    How to sample a JSA. Centers default to the degenerate wavelength; spans
    (full widths, um) are chosen automatically when not given. `square` forces
    identical signal and idler axes.
    """

    size: int = DEFAULT_GRID_SIZE
    signal_center: Optional[float] = None
    idler_center: Optional[float] = None
    signal_span: Optional[float] = None
    idler_span: Optional[float] = None
    square: bool = False
    boundary_level: float = BOUNDARY_LEVEL

    def __post_init__(self):
        if self.size < MIN_GRID_SIZE:
            raise GridError(f"grid size {self.size} is below the minimum of {MIN_GRID_SIZE}")
        for name in ("signal_span", "idler_span"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise GridError(f"{name} must be positive, got {value}")
        if not 0 < self.boundary_level < 1:
            raise GridError(f"boundary_level must lie in (0, 1), got {self.boundary_level}")


@dataclass
class JSAGrid:
    crystal_id: str
    geometry: Optional[Geometry]
    length_mm: Optional[float]
    pump: Optional[PumpSpec]
    signal_axis: np.ndarray
    idler_axis: np.ndarray
    amplitude: np.ndarray
    interaction: Optional[Interaction] = None
    metadata: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_amplitude(cls, amplitude, signal_axis, idler_axis, crystal_id: str = "synthetic") -> "JSAGrid":
        "Wrap and normalize an arbitrary amplitude matrix, e.g. for synthetic tests"
        amplitude = np.asarray(amplitude)
        norm = np.linalg.norm(amplitude)
        if norm > 0:
            amplitude = amplitude / norm
        return cls(crystal_id, None, None, None, np.asarray(signal_axis, dtype=float), np.asarray(idler_axis, dtype=float), amplitude)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    @property
    def shape(self) -> Tuple[int, int]:
        return self.amplitude.shape

    @property
    def is_square(self) -> bool:
        return self.signal_axis.shape == self.idler_axis.shape and np.allclose(
            self.signal_axis, self.idler_axis, rtol=1e-12, atol=0.0
        )

    def transposed(self) -> "JSAGrid":
        "Same source with the roles of signal and idler exchanged"
        return JSAGrid(
            self.crystal_id, self.geometry, self.length_mm, self.pump,
            self.idler_axis, self.signal_axis, self.amplitude.T,
            self.interaction.swapped() if self.interaction is not None else None,
            dict(self.metadata),
        )

    def describe(self) -> Dict[str, object]:
        data = {
            "crystal": self.crystal_id,
            "grid": list(self.shape),
            "signal_range_um": [float(self.signal_axis[0]), float(self.signal_axis[-1])],
            "idler_range_um": [float(self.idler_axis[0]), float(self.idler_axis[-1])],
        }
        if self.geometry is not None:
            data["geometry"] = self.geometry.describe()
        if self.interaction is not None:
            data["interaction"] = str(self.interaction)
        if self.length_mm is not None:
            data["length_mm"] = self.length_mm
        if self.pump is not None:
            data["pump_um"] = self.pump.wavelength
            data["pump_bandwidth_um"] = self.pump.bandwidth
        data.update(self.metadata)
        return data

    def save(self, directory: Union[str, Path], stem: str, extra: Optional[Dict[str, object]] = None) -> List[Path]:
        """
        Write `<stem>_jsi.csv` (|A|^2, signal rows by idler columns),
        `<stem>_marginals.csv` and the `<stem>.json` sidecar.
        """
        directory = Path(directory)
        marginals = marginals_fwhm(self)
        sidecar = self.describe()
        sidecar.update(
            purity=schmidt_purity(self),
            signal_fwhm_nm=marginals.signal_fwhm * 1e3,
            idler_fwhm_nm=marginals.idler_fwhm * 1e3,
            marginal_clipped=marginals.clipped,
        )
        sidecar.update(extra or {})
        spectra = pd.concat(
            [
                pd.DataFrame({"signal_um": self.signal_axis, "signal_intensity": marginals.signal}),
                pd.DataFrame({"idler_um": self.idler_axis, "idler_intensity": marginals.idler}),
            ],
            axis=1,
        )
        return [
            write_csv(matrix_frame(self.intensity, self.signal_axis, self.idler_axis, "signal_um"), directory / f"{stem}_jsi.csv", index=True),
            write_csv(spectra, directory / f"{stem}_marginals.csv"),
            write_json(sidecar, directory / f"{stem}.json"),
        ]


def _half_span_limit(record: CrystalRecord, center: float) -> float:
    "Largest half-span that keeps the axis and the corner pump inside transparency"
    lo, hi = record.transparency
    floor = 2.0 * lo if center > 2.0 * lo else lo
    limit = min(center - floor, hi - center)
    if not limit > 0:
        raise GridError(f"{record.id}: grid center {center:.6g} um is outside the transparency window {lo}-{hi} um")
    return limit * (1.0 - 1e-9)


def _boundary_envelope(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    pump: PumpSpec,
    length_mm: float,
    signal,
    idler,
) -> float:
    "Largest value of |PEF|^2 min(1, (2 / dk L)^2) over the edge samples"
    pef2 = pump_envelope(pump, signal, idler) ** 2
    half_phase = mismatch_grid(record, interaction, geometry, signal, idler) * length_mm * 1e3 / 2.0
    with np.errstate(divide="ignore"):
        sinc_bound = np.minimum(1.0, 1.0 / half_phase ** 2)
    return float(np.max(pef2 * sinc_bound))


def auto_spans(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    pump: PumpSpec,
    length_mm: float,
    centers: Tuple[float, float],
    level: float = BOUNDARY_LEVEL,
    square: bool = False,
) -> Tuple[float, float]:
    """
    Grow symmetric spans around `centers` until the joint-intensity envelope on
    every boundary line falls below `level`.

    Spans start at a tenth of the pump FWHM mapped onto each axis and grow by 1.25
    per step, capped at MAX_SPAN_FACTOR times that FWHM and at the transparency
    edge (clipping logs a warning).
    """
    mapped = [pump.mapped_fwhm(c) for c in centers]
    spans = [START_FRACTION * m for m in mapped]
    caps = [min(MAX_SPAN_FACTOR * m, 2.0 * _half_span_limit(record, c)) for m, c in zip(mapped, centers)]
    if square:
        spans = [max(spans)] * 2
        caps = [min(caps)] * 2
    spans = [min(s, cap) for s, cap in zip(spans, caps)]
    offsets = np.linspace(-0.5, 0.5, EDGE_SAMPLES)
    for _ in range(1000):
        lines = [centers[k] + spans[k] * offsets for k in (0, 1)]
        edges = [
            max(
                _boundary_envelope(record, interaction, geometry, pump, length_mm, centers[0] + side * spans[0] / 2, lines[1])
                for side in (-1, 1)
            ),
            max(
                _boundary_envelope(record, interaction, geometry, pump, length_mm, lines[0], centers[1] + side * spans[1] / 2)
                for side in (-1, 1)
            ),
        ]
        grow = [edges[k] >= level and spans[k] < caps[k] for k in (0, 1)]
        if square and any(grow):
            grow = [True, True]
        if not any(grow):
            break
        spans = [min(spans[k] * SPAN_GROWTH, caps[k]) if grow[k] else spans[k] for k in (0, 1)]
    for k, name in enumerate(("signal", "idler")):
        if edges[k] >= level:
            logger.warning(
                "%s: %s span clipped at %.4g um, boundary intensity %.2e above %.0e",
                record.id, name, spans[k], edges[k], level,
            )
    logger.info("%s: JSA spans %.4g x %.4g um", record.id, spans[0], spans[1])
    return spans[0], spans[1]


def _check_corners(record: CrystalRecord, signal_axis: np.ndarray, idler_axis: np.ndarray) -> None:
    for s in (signal_axis[0], signal_axis[-1]):
        for i in (idler_axis[0], idler_axis[-1]):
            pump = 1.0 / (1.0 / s + 1.0 / i)
            if not all(record.transparency_check((pump, s, i))):
                raise GridError(
                    f"{record.id}: grid corner (signal {s:.6g} um, idler {i:.6g} um, pump {pump:.6g} um) "
                    f"is outside the transparency window {record.transparency[0]}-{record.transparency[1]} um"
                )


def build_jsa(
    record: CrystalRecord,
    interaction: Interaction,
    geometry: Geometry,
    pump: PumpSpec,
    length_mm: float,
    spec: Optional[GridSpec] = None,
) -> JSAGrid:
    """
    Sample PEF * PMF on a `spec.size` x `spec.size` wavelength grid and normalize it
    to unit Frobenius norm.
    """
    spec = spec or GridSpec()
    degenerate = 2.0 * pump.wavelength
    centers = (spec.signal_center or degenerate, spec.idler_center or degenerate)
    if spec.square and centers[0] != centers[1]:
        raise GridError(f"square grids need equal centers, got {centers[0]} and {centers[1]} um")
    spans = [spec.signal_span, spec.idler_span]
    if spec.square and None not in spans and spans[0] != spans[1]:
        raise GridError("square grids need equal spans")
    if None in spans:
        auto = auto_spans(record, interaction, geometry, pump, length_mm, centers, spec.boundary_level, spec.square)
        spans = [given if given is not None else chosen for given, chosen in zip(spans, auto)]
        if spec.square:
            spans = [max(spans)] * 2
    signal_axis = np.linspace(centers[0] - spans[0] / 2, centers[0] + spans[0] / 2, spec.size)
    idler_axis = np.linspace(centers[1] - spans[1] / 2, centers[1] + spans[1] / 2, spec.size)
    if spec.square:
        idler_axis = signal_axis.copy()
    _check_corners(record, signal_axis, idler_axis)
    signal, idler = np.meshgrid(signal_axis, idler_axis, indexing="ij")
    amplitude = pump_envelope(pump, signal, idler) * phase_matching_function(
        record, interaction, geometry, length_mm, signal, idler
    )
    norm = np.linalg.norm(amplitude)
    if norm > 0:
        amplitude = amplitude / norm
    else:
        logger.warning("%s: JSA vanishes on the whole grid", record.id)
    return JSAGrid(record.id, geometry, length_mm, pump, signal_axis, idler_axis, amplitude, interaction)


class Marginals(NamedTuple):
    "Marginal spectra (row/column sums of |A|^2) and their FWHMs in um"

    signal: np.ndarray
    idler: np.ndarray
    signal_fwhm: float
    idler_fwhm: float
    clipped: bool


def spectrum_fwhm(axis: np.ndarray, values: np.ndarray) -> Tuple[float, bool]:
    """
    Full width at half maximum by linear interpolation between the samples that
    cross half maximum. Returns (fwhm, clipped); the width is NaN when a crossing
    falls outside the axis.
    """
    values = np.asarray(values, dtype=float)
    peak = int(np.argmax(values))
    half = values[peak] / 2.0
    if not half > 0:
        return float("nan"), True
    clipped = peak in (0, len(values) - 1)
    below_left = np.nonzero(values[:peak] < half)[0]
    below_right = np.nonzero(values[peak + 1:] < half)[0]
    if len(below_left) == 0 or len(below_right) == 0:
        return float("nan"), True
    i = below_left[-1]
    left = np.interp(half, [values[i], values[i + 1]], [axis[i], axis[i + 1]])
    j = peak + 1 + below_right[0]
    right = np.interp(half, [values[j], values[j - 1]], [axis[j], axis[j - 1]])
    return float(right - left), clipped


def marginals_fwhm(grid: JSAGrid) -> Marginals:
    intensity = grid.intensity
    signal, idler = intensity.sum(axis=1), intensity.sum(axis=0)
    signal_fwhm, signal_clipped = spectrum_fwhm(grid.signal_axis, signal)
    idler_fwhm, idler_clipped = spectrum_fwhm(grid.idler_axis, idler)
    clipped = signal_clipped or idler_clipped
    if clipped:
        logger.warning("%s: marginal spectrum clipped by the grid boundary", grid.crystal_id)
    return Marginals(signal, idler, signal_fwhm, idler_fwhm, clipped)


def schmidt_purity(grid: Union[JSAGrid, np.ndarray]) -> float:
    """
    Spectral purity sum(p_n^2) with p_n = s_n^2 / sum(s^2) from the singular values
    of the amplitude matrix.
    """
    amplitude = grid.amplitude if isinstance(grid, JSAGrid) else np.asarray(grid)
    singular = np.linalg.svd(amplitude, compute_uv=False)
    weights = singular ** 2
    total = weights.sum()
    if not total > 0:
        raise UndefinedPurityError("purity is undefined for an all-zero amplitude")
    p = weights / total
    return float(np.sum(p ** 2))


def default_source(record: CrystalRecord, solution) -> Tuple[PumpSpec, float]:
    """
    Pump and crystal length (mm) used to characterise a GVM solution: fixed
    settings for GVM1 and GVM2, a pump matched to the phase-matching width for GVM3.
    """
    from .gvm import matched_pump_bandwidth

    settings = SOURCE_SETTINGS[solution.condition]
    length_mm = settings["length_mm"]
    if settings["pump_bw_nm"] is None:
        bandwidth = matched_pump_bandwidth(record, solution, length_mm)
    else:
        bandwidth = settings["pump_bw_nm"] * 1e-3
    return PumpSpec(solution.triple.pump, bandwidth), length_mm


def solution_jsa(record: CrystalRecord, solution, spec: Optional[GridSpec] = None, pump: Optional[PumpSpec] = None, length_mm: Optional[float] = None) -> JSAGrid:
    "JSA of a GVM solution, with `default_source` filling whatever is not given"
    if pump is None or length_mm is None:
        default_pump, default_length = default_source(record, solution)
        pump = pump or default_pump
        length_mm = length_mm or default_length
    grid = build_jsa(record, solution.interaction, solution.geometry, pump, length_mm, spec)
    grid.metadata.update(condition=solution.condition, theta_pmf_deg=solution.theta_pmf.degrees)
    return grid


def predicted_purity(record: CrystalRecord, solution, size: int = DEFAULT_GRID_SIZE) -> float:
    return schmidt_purity(solution_jsa(record, solution, GridSpec(size=size)))
