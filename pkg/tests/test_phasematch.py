import json
import math

import numpy as np
import pandas as pd
import pytest

from spdckit.exceptions import DegenerateGratingError, GeometryError, NoSolutionError
from spdckit.geometry import Geometry
from spdckit.phasematch import (
    BirefringentPhaseMatcher,
    QuasiPhaseMatcher,
    bracket_roots,
    delta_k,
    grating_vector,
    phase_matcher_for,
    pm_map,
    poling_period,
    qpm_geometry,
    solve_bpm_angle,
)
from spdckit.photons import PhotonTriple
from spdckit.registry import CrystalRecord, load_registry


def base_case_record(crystal_id):
    return load_registry()[crystal_id]


def base_case_flat():
    return CrystalRecord.model_validate(
        {
            "id": "FLAT",
            "chemical_formula": "X",
            "optical_class": "isotropic",
            "point_group": "-43m",
            "transparency": [0.5, 20.0],
            "dispersion": {"n": {"terms": [["constant", 5.0]]}},
            "interaction": {"method": "qpm", "type_tag": "type-0", "pump": "n", "signal": "n", "idler": "n"},
        }
    )


# root bracketing
def test_bracket_roots():
    assert bracket_roots(np.arange(4.0), np.array([1.0, -1.0, 0.0, 2.0])) == [(0.0, 1.0), (2.0, 2.0)]


def test_bracket_roots_nan_breaks_bracket():
    assert bracket_roots(np.arange(3.0), np.array([1.0, np.nan, -1.0])) == []


# birefringent phase matching
def test_ags_degenerate_angle():
    record = base_case_record("AGS")
    interaction = record.interaction.interaction
    triple = PhotonTriple.degenerate(1.69)
    angles = solve_bpm_angle(record, interaction, None, triple)
    assert any(abs(a - 53.72) < 0.5 for a in angles)
    for angle in angles:
        assert abs(delta_k(record, interaction, Geometry.uniaxial(angle), triple)) < 1e-8


def test_angles_are_sorted():
    record = base_case_record("LiIO3")
    angles = solve_bpm_angle(record, record.interaction.interaction, None, PhotonTriple.degenerate(0.835))
    assert angles == sorted(angles)
    assert all(0.0 <= a <= 90.0 for a in angles)


def test_biaxial_plane_angle_has_zero_mismatch():
    record = base_case_record("LISe")
    matcher = phase_matcher_for(record)
    assert isinstance(matcher, BirefringentPhaseMatcher)
    triple = PhotonTriple.degenerate(1.912)
    for angle in matcher.phase_match(triple):
        assert abs(matcher.delta_k(matcher.geometry(angle), triple)) < 1e-8


def test_isotropic_bpm_has_no_solution():
    record = base_case_record("OP-ZnSe")
    with pytest.raises(NoSolutionError) as info:
        solve_bpm_angle(record, record.interaction.interaction, None, PhotonTriple.degenerate(3.4))
    low, high = info.value.extrema
    assert low <= high
    assert low > 0 or high < 0


def test_biaxial_needs_plane():
    record = base_case_record("KTP")
    with pytest.raises(GeometryError):
        BirefringentPhaseMatcher(record)


# quasi phase matching
def test_ktp_degenerate_period():
    record = base_case_record("KTP")
    period = poling_period(record, record.interaction.interaction, PhotonTriple.degenerate(0.792))
    assert period == pytest.approx(45.0, abs=0.5)


def test_qpm_geometry_cancels_mismatch():
    record = base_case_record("KTP")
    interaction = record.interaction.interaction
    triple = PhotonTriple.from_pump_signal(0.7, 1.3)
    geometry = qpm_geometry(record, interaction, triple)
    assert geometry.period == pytest.approx(poling_period(record, interaction, triple))
    assert abs(delta_k(record, interaction, geometry, triple)) < 1e-9
    assert grating_vector(geometry) == pytest.approx(geometry.grating_sign * 2 * math.pi / geometry.period)


def test_third_order_period_is_three_times_longer():
    record = base_case_record("LN")
    interaction = record.interaction.interaction
    triple = PhotonTriple.degenerate(1.34)
    assert poling_period(record, interaction, triple, order=3) == pytest.approx(3 * poling_period(record, interaction, triple))


def test_quasi_phase_matcher():
    matcher = QuasiPhaseMatcher.load("LT")
    assert matcher.crystal_id == "LT"
    geometry = matcher.phase_match(PhotonTriple.degenerate(1.279))
    assert geometry.is_qpm
    assert geometry.period == pytest.approx(matcher.poling_period(PhotonTriple.degenerate(1.279)))


def test_zero_mismatch_has_no_period():
    record = base_case_flat()
    with pytest.raises(DegenerateGratingError):
        poling_period(record, record.interaction.interaction, PhotonTriple.degenerate(1.0))


# maps
def test_pm_map_marks_absent_points(tmp_path):
    record = base_case_record("KTP")
    result = pm_map(record, record.interaction.interaction, (0.6, 0.9), (0.7, 3.0), grid=(4, 6))
    assert result.shape == (4, 6)
    # signal 0.7 um is not longer than pump 0.9 um
    assert np.isnan(result.period[-1, 0])
    assert np.isfinite(result.period).any()
    assert np.all(np.isnan(result.theta_pmf) == np.isnan(result.period))

    paths = result.save(tmp_path, "ktp_map")
    assert [p.name for p in paths] == ["ktp_map_period.csv", "ktp_map_theta_pmf.csv", "ktp_map.json"]
    frame = pd.read_csv(paths[0], index_col=0)
    assert frame.shape == (4, 6)
    meta = json.loads(paths[2].read_text())
    assert meta["grid"] == [4, 6]
    assert meta["crystal"] == "KTP"


def test_pm_map_type_zero_is_symmetric_in_signal_and_idler():
    record = base_case_record("OP-ZnSe")
    interaction = record.interaction.interaction
    forward = pm_map(record, interaction, (3.0, 3.0), (5.0, 5.0), grid=(1, 1))
    mirrored = pm_map(record, interaction, (3.0, 3.0), (7.5, 7.5), grid=(1, 1))
    assert mirrored.period[0, 0] == pytest.approx(forward.period[0, 0], rel=1e-9)
    assert mirrored.theta_pmf[0, 0] == pytest.approx((90.0 - forward.theta_pmf[0, 0]) % 180.0, abs=1e-9)


def test_bpm_angle_is_continuous_in_pump():
    record = base_case_record("AGS")
    interaction = record.interaction.interaction
    angles = [solve_bpm_angle(record, interaction, None, PhotonTriple.degenerate(p))[0] for p in np.arange(1.5, 2.9, 0.02)]
    assert np.max(np.abs(np.diff(angles))) < 1.0
