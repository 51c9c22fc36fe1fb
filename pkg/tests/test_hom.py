import json
import math

import numpy as np
import pandas as pd
import pytest

from spdckit.exceptions import AxisMismatchError
from spdckit.gvm import solve_gvm
from spdckit.hom import (
    HOMTrace,
    default_delays,
    extract_visibility_fwhm,
    four_fold_literal,
    four_fold_trace,
    two_fold_trace,
)
from spdckit.jsa import GridSpec, JSAGrid, PumpSpec, schmidt_purity, solution_jsa
from spdckit.registry import load_registry


def base_case_synthetic(size=48, rho=0.0, shift=0.0):
    "Correlated Gaussian on a square 1.5-1.7 um grid"
    axis = np.linspace(1.5, 1.7, size)
    s, i = np.meshgrid(axis, axis, indexing="ij")
    x, y = (s - 1.6 - shift) / 0.02, (i - 1.6) / 0.02
    amplitude = np.exp(-(x ** 2 + y ** 2 - 2 * rho * x * y) / 2)
    return JSAGrid.from_amplitude(amplitude, axis, axis)


@pytest.fixture(scope="module")
def batio3():
    record = load_registry()["BaTiO3"]
    return solution_jsa(record, solve_gvm(record, "GVM1"))


@pytest.fixture(scope="module")
def pmn_square():
    record = load_registry()["PMN-0.38PT"]
    solution = solve_gvm(record, "GVM3")
    spec = GridSpec(square=True, signal_span=0.8, idler_span=0.8)
    return solution_jsa(record, solution, spec, PumpSpec(solution.triple.pump, 0.011), 100.0)


@pytest.fixture(scope="module")
def lgse():
    record = load_registry()["LGSe"]
    return solution_jsa(record, solve_gvm(record, "GVM2"))


# dip shape
def test_flat_trace_has_no_dip():
    shape = extract_visibility_fwhm(np.linspace(-10, 10, 101), np.full(101, 0.5))
    assert shape.visibility == 0.0
    assert shape.fwhm is None
    assert shape.plateau == pytest.approx(0.5)


def test_gaussian_dip():
    delays = np.linspace(-500, 500, 1001)
    width = 40.0
    probability = 0.5 * (1 - 0.8 * np.exp(-delays ** 2 / (2 * width ** 2)))
    shape = extract_visibility_fwhm(delays, probability)
    assert shape.visibility == pytest.approx(0.8, rel=0.01)
    assert shape.fwhm == pytest.approx(2 * math.sqrt(2 * math.log(2)) * width, rel=0.01)


def test_dip_cut_by_sweep_has_no_width():
    delays = np.linspace(-10, 10, 101)
    shape = extract_visibility_fwhm(delays, 0.5 * (1 - np.exp(-(delays + 10) ** 2 / 8)))
    assert shape.visibility > 0
    assert shape.fwhm is None


# two-fold
def test_two_fold_symmetric_source_fully_bunches():
    trace = two_fold_trace(base_case_synthetic(rho=-0.6))
    assert trace.visibility == pytest.approx(1.0, abs=0.01)
    assert trace.probability[len(trace.delays) // 2] == pytest.approx(0.0, abs=1e-9)


def test_two_fold_is_even_in_delay():
    grid = base_case_synthetic(rho=0.4, shift=0.01)
    delays = np.linspace(-300, 300, 61)
    probability = two_fold_trace(grid, delays).probability
    assert np.allclose(probability, probability[::-1], atol=1e-12)


def test_two_fold_far_delays_reach_half():
    trace = two_fold_trace(base_case_synthetic(rho=0.3))
    assert trace.probability[0] == pytest.approx(0.5, abs=0.01)
    assert trace.probability[-1] == pytest.approx(0.5, abs=0.01)
    assert np.all((trace.probability >= -1e-12) & (trace.probability <= 1 + 1e-12))


def test_two_fold_needs_square_grid():
    grid = base_case_synthetic()
    grid = JSAGrid.from_amplitude(grid.amplitude, grid.signal_axis, grid.idler_axis + 0.01)
    with pytest.raises(AxisMismatchError):
        two_fold_trace(grid)


def test_pmn_two_fold_width(pmn_square):
    trace = two_fold_trace(pmn_square)
    assert trace.fwhm == pytest.approx(2200.0, rel=0.05)
    # tabulated 100%
    assert trace.visibility == pytest.approx(0.9976, abs=0.002)
    assert trace.visibility > 0.995


# four-fold
def test_four_fold_pure_identical_sources():
    grid = base_case_synthetic(rho=0.0)
    trace = four_fold_trace(grid, grid)
    assert trace.visibility == pytest.approx(1.0, abs=0.01)


def test_four_fold_visibility_tracks_purity():
    grid = base_case_synthetic(rho=0.5)
    trace = four_fold_trace(grid, grid)
    assert trace.visibility == pytest.approx(schmidt_purity(grid), abs=0.02)


def test_four_fold_matches_literal_sum():
    rng = np.random.default_rng(11)
    axis = np.linspace(1.55, 1.65, 12)
    grid1 = JSAGrid.from_amplitude(rng.normal(size=(12, 12)), axis, axis + 0.2)
    grid2 = JSAGrid.from_amplitude(rng.normal(size=(12, 12)), axis, axis + 0.3)
    delays = np.linspace(-200, 200, 9)
    fast = four_fold_trace(grid1, grid2, delays).probability
    assert np.allclose(fast, four_fold_literal(grid1, grid2, delays), atol=1e-12)


def test_four_fold_idlers_literal_sum():
    rng = np.random.default_rng(12)
    axis = np.linspace(1.55, 1.65, 10)
    grid1 = JSAGrid.from_amplitude(rng.normal(size=(10, 10)), axis + 0.2, axis)
    grid2 = JSAGrid.from_amplitude(rng.normal(size=(10, 10)), axis + 0.1, axis)
    delays = np.linspace(-100, 100, 5)
    fast = four_fold_trace(grid1, grid2, delays, which="idlers").probability
    assert np.allclose(fast, four_fold_literal(grid1, grid2, delays, which="idlers"), atol=1e-12)


def test_four_fold_needs_shared_axis():
    grid = base_case_synthetic()
    other = JSAGrid.from_amplitude(grid.amplitude, grid.signal_axis + 0.01, grid.idler_axis)
    with pytest.raises(AxisMismatchError):
        four_fold_trace(grid, other)
    with pytest.raises(ValueError):
        four_fold_trace(grid, grid, which="pumps")


def test_batio3_four_fold(batio3):
    trace = four_fold_trace(batio3, batio3, which="signals")
    assert trace.fwhm == pytest.approx(726.87, rel=0.05)
    assert trace.visibility == pytest.approx(schmidt_purity(batio3), abs=0.01)
    assert trace.visibility == pytest.approx(0.9668, abs=0.005)


def test_batio3_four_fold_idlers(batio3):
    trace = four_fold_trace(batio3, batio3, which="idlers")
    assert trace.visibility == pytest.approx(0.9668, abs=0.005)
    # tabulated 8740 fs
    assert trace.fwhm == pytest.approx(7770.0, rel=0.05)


def test_lgse_four_fold(lgse):
    signals = four_fold_trace(lgse, lgse, which="signals")
    idlers = four_fold_trace(lgse, lgse, which="idlers")
    assert signals.visibility == pytest.approx(0.9705, abs=0.005)
    assert idlers.visibility == pytest.approx(0.9705, abs=0.005)
    assert idlers.fwhm == pytest.approx(1170.0, rel=0.05)
    # tabulated 12460 fs
    assert signals.fwhm == pytest.approx(10560.0, rel=0.05)


def test_pmn_four_fold(pmn_square):
    trace = four_fold_trace(pmn_square, pmn_square, which="signals")
    assert trace.visibility == pytest.approx(0.8233, abs=0.005)
    # tabulated 12240 fs
    assert trace.fwhm == pytest.approx(2540.0, rel=0.1)


# delays and output
def test_default_delays():
    grid = base_case_synthetic()
    delays = default_delays(grid)
    assert len(delays) == 201
    assert delays[0] == pytest.approx(-delays[-1])
    with pytest.raises(ValueError):
        default_delays(grid, "heralds")


def test_save(tmp_path):
    trace = HOMTrace.from_probability("two-fold", np.linspace(-1, 1, 5), np.array([0.5, 0.4, 0.1, 0.4, 0.5]), crystal="X")
    csv_path, json_path = trace.save(tmp_path, "hom", {"command": "hom"})
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ["delay_fs", "probability"]
    sidecar = json.loads(json_path.read_text())
    assert sidecar["mode"] == "two-fold"
    assert sidecar["crystal"] == "X"
    assert sidecar["visibility"] == pytest.approx(0.8)


def test_four_fold_is_even_in_delay():
    grid = base_case_synthetic(rho=0.4, shift=0.01)
    delays = np.linspace(-300, 300, 61)
    for which in ("signals", "idlers"):
        probability = four_fold_trace(grid, grid, delays, which=which).probability
        assert np.allclose(probability, probability[::-1], atol=1e-12)
