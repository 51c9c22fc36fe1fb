import json

import pandas as pd
import pytest

from spdckit.registry import CrystalRegistry, load_registry
from spdckit.survey import (
    CONVERGENT,
    NOT_SATISFIED,
    SURVEY_COLUMNS,
    merge_convergent,
    save_survey,
    survey,
    survey_crystal,
    survey_ranges,
)


def base_case_registry(*ids):
    registry = load_registry()
    return CrystalRegistry([registry[i] for i in ids])


def test_survey_crystal_reports_unsatisfied_rows():
    record = load_registry()["MgBaF4"]
    rows = survey_crystal(record, ("GVM2",), purity=False)
    assert rows[0]["status"] == NOT_SATISFIED
    assert rows[0]["pump_nm"] is None
    assert set(rows[0]) == set(SURVEY_COLUMNS)


def test_small_survey_splits_methods():
    bpm, qpm = survey(base_case_registry("AGS", "KTP", "MgBaF4"), purity=False)
    assert list(bpm.columns) == SURVEY_COLUMNS
    assert list(bpm["crystal"]) == ["AGS"] * 3
    assert list(qpm["crystal"]) == ["KTP"] * 3 + ["MgBaF4"] * 3
    assert (bpm["status"] == "ok").all()
    assert (qpm[qpm["crystal"] == "KTP"]["status"] == "ok").all()
    ranges = survey_ranges(qpm)
    assert ranges["GVM1"]["rows"] == 2
    assert ranges["GVM2"]["solved"] == 1
    assert survey_ranges(qpm[qpm["crystal"] == "KTP"])["GVM1"]["pump_nm"][0] == pytest.approx(613, rel=0.005)


def test_survey_purity_column():
    bpm, qpm = survey(base_case_registry("BaTiO3"), conditions=("GVM1",))
    assert bpm.empty
    assert 0.95 <= qpm["purity"][0] <= 0.99


def test_parallel_survey_matches_serial():
    registry = base_case_registry("KTP", "LT", "AGS")
    serial = survey(registry, purity=False)
    parallel = survey(registry, purity=False, workers=2)
    for a, b in zip(serial, parallel):
        pd.testing.assert_frame_equal(a, b)


def test_empty_registry():
    bpm, qpm = survey(CrystalRegistry(), purity=False)
    assert bpm.empty and qpm.empty
    assert list(qpm.columns) == SURVEY_COLUMNS


def test_save_survey(tmp_path):
    bpm, qpm = survey(base_case_registry("AGS", "KTP"), purity=False)
    paths = save_survey(bpm, qpm, tmp_path)
    assert [p.name for p in paths] == ["survey_bpm.csv", "survey_qpm.csv", "survey_summary.json"]
    assert list(pd.read_csv(paths[0]).columns) == SURVEY_COLUMNS
    summary = json.loads(paths[2].read_text())
    assert summary["bpm"]["GVM3"]["solved"] == 1

    paths = save_survey(bpm, qpm, tmp_path / "json", fmt="json")
    assert paths[0].name == "survey_bpm.json"
    assert len(json.loads(paths[1].read_text())["rows"]) == 3


def test_full_birefringent_ranges():
    registry = load_registry()
    bpm, _ = survey(CrystalRegistry(registry.by_method("bpm")), purity=False)
    ranges = survey_ranges(bpm)
    for condition, (low, high) in {"GVM1": (1298, 7384), "GVM2": (2312, 11650), "GVM3": (1658, 9380)}.items():
        assert ranges[condition]["signal_nm"][0] == pytest.approx(low, rel=0.005)
        assert ranges[condition]["signal_nm"][1] == pytest.approx(high, rel=0.005)
        assert ranges[condition]["idler_nm"] == ranges[condition]["signal_nm"]
        assert ranges[condition]["pump_nm"][0] == pytest.approx(low / 2, rel=0.005)


def test_op_znse_conditions_merge_into_one_row():
    rows = survey_crystal(load_registry()["OP-ZnSe"], purity=False)
    assert len(rows) == 1
    row = rows[0]
    assert row["status"] == CONVERGENT
    assert row["condition"] == "GVM1+GVM2+GVM3"
    assert row["singular"] is True
    assert row["pump_nm"] == pytest.approx(3403, rel=0.005)
    assert row["period_um"] == pytest.approx(262.85, rel=0.01)


def test_merge_convergent_keeps_regular_rows():
    regular = {"crystal": "X", "condition": "GVM1", "status": "ok", "singular": False, "pump_nm": 1000.0}
    assert merge_convergent([regular]) == [regular]
    apart = [dict(regular, condition=c, singular=True, pump_nm=p) for c, p in (("GVM1", 1000.0), ("GVM2", 1500.0))]
    assert merge_convergent(apart) == apart


def test_convergent_rows_count_as_solved():
    _, qpm = survey(base_case_registry("OP-ZnSe"), purity=False)
    ranges = survey_ranges(qpm)
    assert ranges["all"]["solved"] == 1
    assert ranges["all"]["period_um"][0] == pytest.approx(262.85, rel=0.01)


def test_qpm_ranges_over_bundled_registry():
    registry = load_registry()
    _, qpm = survey(CrystalRegistry(registry.by_method("qpm")), purity=False)
    ranges = survey_ranges(qpm)["all"]
    assert ranges["period_um"][0] == pytest.approx(6.1, rel=0.01)
    assert ranges["period_um"][1] == pytest.approx(1301.38, rel=0.01)
    assert ranges["signal_nm"][0] == pytest.approx(1224, rel=0.005)
    assert ranges["signal_nm"][1] == pytest.approx(7944, rel=0.005)
