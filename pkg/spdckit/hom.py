"""
Hong-Ou-Mandel interference of SPDC photons.

Two-fold: signal and idler of one source meet on a beam splitter. Four-fold:
the signals (or idlers) of two sources interfere while their partners herald.
Delays are in femtoseconds and amplitudes are weighted with the frequency-space
Riemann weights of the wavelength grids.
"""
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from .config import DEFAULT_DELAY_POINTS
from .exceptions import AxisMismatchError
from .file_utils import write_csv, write_json
from .jsa import TWO_PI_C, JSAGrid, angular_frequency, marginals_fwhm

logger = logging.getLogger(__name__)

MODES = ("two-fold", "signals", "idlers")
PLATEAU_FRACTION = 0.05
WIDTH_FACTOR = 4.0
SPAN_WIDTHS = 5.0
MIN_DEPTH = 1e-12


class DipShape(NamedTuple):
    visibility: float
    fwhm: Optional[float]
    plateau: float
    minimum: float


def extract_visibility_fwhm(delays, probability) -> DipShape:
    """
    Visibility (plateau - minimum) / plateau and the dip FWHM (fs).

    The plateau is the mean over the outer 5% of delays at each end, the minimum
    is refined with a parabola through the three lowest samples and the FWHM is
    measured at half depth with linear interpolation. `fwhm` is None when there is
    no dip or a half-depth crossing lies outside the sweep.
    """
    delays = np.asarray(delays, dtype=float)
    probability = np.asarray(probability, dtype=float)
    n = len(probability)
    edge = max(1, int(round(PLATEAU_FRACTION * n)))
    plateau = float(np.mean(np.concatenate([probability[:edge], probability[-edge:]])))
    k = int(np.argmin(probability))
    minimum = float(probability[k])
    if 0 < k < n - 1:
        a, b, c = np.polyfit(delays[k - 1:k + 2], probability[k - 1:k + 2], 2)
        if a > 0:
            minimum = min(minimum, float(c - b * b / (4.0 * a)))
    depth = plateau - minimum
    if depth <= MIN_DEPTH or plateau <= 0:
        return DipShape(0.0, None, plateau, minimum)
    half = plateau - depth / 2.0
    above_left = np.nonzero(probability[:k] >= half)[0]
    above_right = np.nonzero(probability[k + 1:] >= half)[0]
    if len(above_left) == 0 or len(above_right) == 0:
        return DipShape(depth / plateau, None, plateau, minimum)
    i = above_left[-1]
    left = np.interp(half, [probability[i + 1], probability[i]], [delays[i + 1], delays[i]])
    j = k + 1 + above_right[0]
    right = np.interp(half, [probability[j - 1], probability[j]], [delays[j - 1], delays[j]])
    return DipShape(depth / plateau, float(right - left), plateau, minimum)


@dataclass
class HOMTrace:
    "Coincidence probability against delay, with the dip visibility and FWHM"

    mode: str
    delays: np.ndarray
    probability: np.ndarray
    visibility: float
    fwhm: Optional[float]
    metadata: Dict[str, object] = field(default_factory=dict)

    @classmethod
    def from_probability(cls, mode: str, delays, probability, **metadata) -> "HOMTrace":
        shape = extract_visibility_fwhm(delays, probability)
        return cls(mode, np.asarray(delays, dtype=float), np.asarray(probability), shape.visibility, shape.fwhm, metadata)

    def save(self, directory: Union[str, Path], stem: str, parameters: Optional[Dict[str, object]] = None) -> List[Path]:
        "Write `<stem>.csv` (delay_fs, probability) and the `<stem>.json` sidecar"
        directory = Path(directory)
        frame = pd.DataFrame({"delay_fs": self.delays, "probability": self.probability})
        sidecar = {"mode": self.mode, "visibility": self.visibility, "fwhm_fs": self.fwhm, **self.metadata}
        sidecar.update(parameters or {})
        return [write_csv(frame, directory / f"{stem}.csv"), write_json(sidecar, directory / f"{stem}.json")]


def frequency_weights(axis: np.ndarray) -> np.ndarray:
    "Riemann weights d(omega) = 2 pi c / lambda^2 d(lambda) of a uniform wavelength axis"
    step = abs(axis[1] - axis[0]) if len(axis) > 1 else 1.0
    return TWO_PI_C / np.asarray(axis, dtype=float) ** 2 * step


def weighted_amplitude(grid: JSAGrid) -> np.ndarray:
    "Amplitude times sqrt(w_s w_i), renormalized to unit norm"
    weighted = grid.amplitude * np.sqrt(np.outer(frequency_weights(grid.signal_axis), frequency_weights(grid.idler_axis)))
    norm = np.linalg.norm(weighted)
    return weighted / norm if norm > 0 else weighted


def _phases(delays, frequencies: np.ndarray) -> np.ndarray:
    return np.exp(1j * np.outer(np.asarray(delays, dtype=float), frequencies))


def _same_axis(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and np.allclose(a, b, rtol=1e-12, atol=0.0)


def two_fold_trace(grid: JSAGrid, delays=None) -> HOMTrace:
    """
    P2(tau) = 1/4 sum |f(ws, wi) - f(wi, ws) exp(-i (ws - wi) tau)|^2, which reduces
    to 1/2 - 1/2 Re sum f(ws, wi) f*(wi, ws) exp(i (ws - wi) tau).
    """
    if not grid.is_square:
        raise AxisMismatchError("two-fold interference needs identical signal and idler axes")
    delays = default_delays(grid, "two-fold") if delays is None else np.asarray(delays, dtype=float)
    c = weighted_amplitude(grid)
    overlap = c * np.conj(c.T)
    phase = _phases(delays, angular_frequency(grid.signal_axis))
    cross = np.einsum("ts,si,ti->t", phase, overlap, np.conj(phase))
    probability = 0.5 - 0.5 * np.real(cross)
    trace = HOMTrace.from_probability("two-fold", delays, probability, crystal=grid.crystal_id)
    logger.info("%s two-fold: visibility %.4f, FWHM %s fs", grid.crystal_id, trace.visibility, trace.fwhm)
    return trace


def _interfering(grid1: JSAGrid, grid2: JSAGrid, which: str):
    if which not in ("signals", "idlers"):
        raise ValueError(f"four-fold mode must be 'signals' or 'idlers', got '{which}'")
    if which == "idlers":
        grid1, grid2 = grid1.transposed(), grid2.transposed()
    if not _same_axis(grid1.signal_axis, grid2.signal_axis):
        raise AxisMismatchError(f"the interfering {which} of both sources must share one wavelength axis")
    return grid1, grid2


def four_fold_trace(grid1: JSAGrid, grid2: JSAGrid, delays=None, which: str = "signals") -> HOMTrace:
    """
    Four-fold coincidence probability when the `which` photons of two sources
    interfere and their partners herald.

    With Gram matrices M = f f^H over the heralding axis,
    P4(tau) = 1/2 - 1/2 Re sum_ab M1[a, b] M2[b, a] exp(-i (w_b - w_a) tau).
    """
    first, second = _interfering(grid1, grid2, which)
    delays = default_delays(grid1, which) if delays is None else np.asarray(delays, dtype=float)
    c1, c2 = weighted_amplitude(first), weighted_amplitude(second)
    gram1 = c1 @ np.conj(c1.T)
    gram2 = c2 @ np.conj(c2.T)
    product = gram1 * gram2.T
    phase = _phases(delays, angular_frequency(first.signal_axis))
    cross = np.einsum("ta,ab,tb->t", phase, product, np.conj(phase))
    probability = 0.5 - 0.5 * np.real(cross)
    trace = HOMTrace.from_probability(which, delays, probability, crystals=[grid1.crystal_id, grid2.crystal_id])
    logger.info("%s/%s four-fold (%s): visibility %.4f, FWHM %s fs", grid1.crystal_id, grid2.crystal_id, which, trace.visibility, trace.fwhm)
    return trace


def four_fold_literal(grid1: JSAGrid, grid2: JSAGrid, delays, which: str = "signals") -> np.ndarray:
    """
    Direct 4-index evaluation of
    1/4 sum |f1(s1, i1) f2(s2, i2) - f1(s2, i1) f2(s1, i2) exp(-i (w_s1 - w_s2) tau)|^2.
    Memory grows as N^4; meant for small grids.
    """
    first, second = _interfering(grid1, grid2, which)
    c1, c2 = weighted_amplitude(first), weighted_amplitude(second)
    omega = angular_frequency(first.signal_axis)
    direct = np.einsum("ab,cd->abcd", c1, c2)
    exchanged = np.einsum("cb,ad->abcd", c1, c2)
    result = []
    for tau in np.asarray(delays, dtype=float):
        phase = np.exp(-1j * np.subtract.outer(omega, omega) * tau)[:, None, :, None]
        result.append(0.25 * np.sum(np.abs(direct - exchanged * phase) ** 2))
    return np.asarray(result)


def default_delays(grid: JSAGrid, which: str = "two-fold", points: int = DEFAULT_DELAY_POINTS) -> np.ndarray:
    """
    `points` delays over +/- 5 expected dip widths, the width being 4 / d(omega)
    for the narrowest relevant marginal bandwidth d(omega).
    """
    if which not in MODES:
        raise ValueError(f"unknown HOM mode '{which}', expected one of {MODES}")
    marginals = marginals_fwhm(grid)
    candidates = []
    if which in ("two-fold", "signals"):
        candidates.append((marginals.signal_fwhm, grid.signal_axis))
    if which in ("two-fold", "idlers"):
        candidates.append((marginals.idler_fwhm, grid.idler_axis))
    widths = []
    for fwhm, axis in candidates:
        if not np.isfinite(fwhm):
            fwhm = axis[-1] - axis[0]
        center = axis[len(axis) // 2]
        widths.append(TWO_PI_C * fwhm / center ** 2)
    tau_w = expected_dip_width(min(widths))
    return np.linspace(-SPAN_WIDTHS * tau_w, SPAN_WIDTHS * tau_w, points)


def expected_dip_width(bandwidth: float) -> float:
    "Rough dip width (fs) for a marginal bandwidth in rad/fs"
    return WIDTH_FACTOR / bandwidth if bandwidth > 0 else math.inf
