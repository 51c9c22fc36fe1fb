import math

import pytest

from spdckit.config import GVM_TOL
from spdckit.exceptions import NoSolutionError
from spdckit.geometry import Geometry
from spdckit.gvm import (
    CONDITIONS,
    TARGET_ANGLES,
    EasyGVMSolver,
    degenerate_window,
    gvm_residual,
    gvm_terms,
    matched_pump_bandwidth,
    pump_grid,
    ridge_angle,
    solve_gvm,
    theta_pmf,
)
from spdckit.jsa import PumpSpec
from spdckit.photons import PhotonTriple
from spdckit.registry import load_registry

# crystal, condition, pump (nm), angle (deg) or None
BPM_CASES = [
    ("AGS", "GVM1", 1690, 53.72),
    ("AGS", "GVM2", 2850, 53.93),
    ("AGS", "GVM3", 2190, 48.87),
    ("AGSe", "GVM1", 2460, 79.70),
    ("AGSe", "GVM2", 4080, 81.93),
    ("AGSe", "GVM3", 3140, 67.21),
    ("GaSe", "GVM1", 2190, 16.07),
    ("GaSe", "GVM2", 3660, 16.07),
    ("GaSe", "GVM3", 2835, 15.00),
    ("LiIO3", "GVM1", 835, 29.32),
    ("LiIO3", "GVM2", 1460, 29.75),
    ("LiIO3", "GVM3", 1090, 27.17),
    ("AAS", "GVM1", 2155, 22.29),
    ("AAS", "GVM2", 3620, 22.33),
    ("AAS", "GVM3", 2795, 20.75),
    ("CGA", "GVM1", 3692, 54.56),
    ("CGA", "GVM2", 5830, 53.90),
    ("CGA", "GVM3", 4695, 49.82),
    ("TAS", "GVM1", 3625, None),
    ("TAS", "GVM2", 5545, None),
    ("TAS", "GVM3", 4575, None),
]

# crystal, condition, pump (nm), period (um) or None
QPM_CASES = [
    ("KTP", "GVM1", 613, 70.0),
    ("KTP", "GVM2", 1169, 72.27),
    ("KTP", "GVM3", 793, 44.95),
    ("OP-ZnSe", "GVM1", 3403, 262.85),
]

# fitted records reproduce the pumps and angles (deg) or periods (um) they were fitted to
SURROGATE_FIT_TARGETS = [
    ("HGS", "GVM1", 1704, 60.1),
    ("HGS", "GVM2", 2819, 59.8),
    ("HGS", "GVM3", 2206, 54.2),
    ("LIS", "GVM1", 1457, 56.7),
    ("LIS", "GVM2", 2473, 56.7),
    ("LIS", "GVM3", 1901, 49.5),
    ("LISe", "GVM1", 1912, 45.8),
    ("LISe", "GVM2", 3205, 45.6),
    ("LISe", "GVM3", 2491, 40.7),
    ("LGS", "GVM1", 1347, 55.5),
    ("LGS", "GVM2", 2282, 55.1),
    ("LGS", "GVM3", 1767, 49.7),
    ("LGSe", "GVM1", 1641, 47.8),
    ("LGSe", "GVM2", 2729, 47.5),
    ("LGSe", "GVM3", 2129, 43.3),
    ("CMTC", "GVM1", 649, 41.2),
    ("CMTC", "GVM2", 1156, 43.6),
    ("CMTC", "GVM3", 829, 38.2),
    ("THI", "GVM1", 2841, 29.3),
    ("THI", "GVM2", 4822, 29.3),
    ("THI", "GVM3", 3705, 27.2),
    ("LN", "GVM1", 1341, 14.7),
    ("LN", "GVM2", 2015, 15.2),
    ("LN", "GVM3", 1709, 15.5),
    ("LT", "GVM1", 1279, 33.7),
    ("LT", "GVM2", 1320, 33.7),
    ("LT", "GVM3", 1299, 33.7),
    ("KN", "GVM1", 1412, 6.16),
    ("KN", "GVM2", 1869, 6.08),
    ("KN", "GVM3", 1605, 6.36),
    ("BaTiO3", "GVM1", 1518, 23.30),
    ("BaTiO3", "GVM2", 1993, 23.37),
    ("BaTiO3", "GVM3", 1740, 23.75),
    ("PMN-0.38PT", "GVM1", 2810, 1301.38),
    ("PMN-0.38PT", "GVM3", 3972, 917.83),
    ("MgBaF4", "GVM1", 989, 414.1),
    ("MgBaF4", "GVM3", 1389, 496.7),
]


@pytest.fixture(scope="module")
def registry():
    return load_registry()


# residuals and ridge angle
def test_residuals_follow_group_velocities(registry):
    record = registry["AGS"]
    interaction = record.interaction.interaction
    geometry = Geometry.uniaxial(50.0)
    triple = PhotonTriple.degenerate(2.0)
    g1, g2 = gvm_terms(record, interaction, geometry, triple)
    assert gvm_residual(record, interaction, geometry, triple, "GVM1") == g1
    assert gvm_residual(record, interaction, geometry, triple, "gvm2") == g2
    assert gvm_residual(record, interaction, geometry, triple, "GVM3") == pytest.approx(g1 + g2)


def test_type_zero_degenerate_gvm3_doubles_gvm1(registry):
    record = registry["OP-ZnSe"]
    interaction = record.interaction.interaction
    triple = PhotonTriple.degenerate(3.0)
    gvm1 = gvm_residual(record, interaction, Geometry.qpm(), triple, "GVM1")
    assert gvm_residual(record, interaction, Geometry.qpm(), triple, "GVM3") == pytest.approx(2 * gvm1)


def test_unknown_condition(registry):
    record = registry["AGS"]
    with pytest.raises(ValueError):
        gvm_residual(record, record.interaction.interaction, Geometry.uniaxial(50.0), PhotonTriple.degenerate(2.0), "GVM4")


@pytest.mark.parametrize("g1, g2, degrees", [(0.0, 1.0, 0.0), (1.0, 0.0, 90.0), (1.0, -1.0, 45.0), (-1.0, 1.0, 45.0)])
def test_ridge_angle_targets(g1, g2, degrees):
    assert ridge_angle(g1, g2).degrees == pytest.approx(degrees)


def test_ridge_angle_range():
    assert 0.0 <= ridge_angle(-1e-3, -1.0).degrees < 180.0
    assert ridge_angle(0.0, -1.0).degrees == 0.0


def test_ridge_angle_singular():
    angle = ridge_angle(1e-13, -1e-13)
    assert angle.singular
    assert math.isnan(angle.degrees)
    assert not ridge_angle(1e-7, 0.0).singular
    assert ridge_angle(1e-7, 0.0, tol=GVM_TOL).singular


@pytest.mark.parametrize("g1, g2", [(1.0, 2.0), (-0.3, 0.7), (0.05, -0.4)])
def test_swapping_photons_reflects_ridge(g1, g2):
    angle = ridge_angle(g1, g2).degrees
    swapped = ridge_angle(g2, g1).degrees
    assert swapped == pytest.approx((90.0 - angle) % 180.0)


def test_theta_pmf_for_swapped_interaction(registry):
    record = registry["KTP"]
    interaction = record.interaction.interaction
    triple = PhotonTriple.from_pump_signal(0.79, 1.5)
    angle = theta_pmf(record, interaction, Geometry.qpm(), triple).degrees
    swapped = theta_pmf(record, interaction.swapped(), Geometry.qpm(), triple.swapped()).degrees
    assert swapped == pytest.approx((90.0 - angle) % 180.0)


# search windows
def test_degenerate_window(registry):
    record = registry["GaSe"]
    lo, hi = degenerate_window(record, (1.0, 3.0))
    assert lo >= record.transparency[0]
    assert hi <= min(3.0, record.transparency[1] / 2)
    with pytest.raises(NoSolutionError):
        degenerate_window(record, (50.0, 60.0))


def test_pump_grid_includes_end():
    grid = pump_grid((1.0, 1.055), 0.01)
    assert grid[0] == 1.0
    assert grid[-1] == pytest.approx(1.055)
    assert len(grid) == 7


# solutions
@pytest.mark.parametrize("crystal, condition, pump_nm, angle", BPM_CASES)
def test_bpm_solutions(registry, crystal, condition, pump_nm, angle):
    solution = solve_gvm(registry[crystal], condition)
    assert solution.method == "bpm"
    assert solution.triple.is_degenerate
    assert solution.triple.pump * 1e3 == pytest.approx(pump_nm, rel=0.005)
    if angle is not None:
        assert solution.angle == pytest.approx(angle, abs=0.5)
    assert solution.violations() == []


@pytest.mark.parametrize("crystal, condition, pump_nm, period", QPM_CASES)
def test_qpm_solutions(registry, crystal, condition, pump_nm, period):
    solution = solve_gvm(registry[crystal], condition)
    assert solution.method == "qpm"
    assert solution.triple.pump * 1e3 == pytest.approx(pump_nm, rel=0.005)
    if period is not None:
        assert solution.period == pytest.approx(period, rel=0.01)
    assert solution.violations() == []


@pytest.mark.parametrize("crystal, condition, pump_nm, target", SURROGATE_FIT_TARGETS)
def test_surrogate_fit_targets(registry, crystal, condition, pump_nm, target):
    record = registry[crystal]
    assert record.provenance == "surrogate"
    assert not record.golden
    solution = solve_gvm(record, condition)
    assert solution.triple.pump * 1e3 == pytest.approx(pump_nm, rel=0.005)
    if solution.method == "qpm":
        assert solution.period == pytest.approx(target, rel=0.01)
    else:
        assert solution.angle == pytest.approx(target, abs=0.5)
    assert solution.violations() == []


def test_golden_cases_use_handbook_records(registry):
    for crystal, *_ in BPM_CASES + QPM_CASES:
        assert registry[crystal].provenance == "handbook", crystal
        assert registry[crystal].golden, crystal


def test_gvm1_ridge_lies_along_signal_axis(registry):
    for record in registry.values():
        if record.interaction is None:
            continue
        try:
            solution = solve_gvm(record, "GVM1")
        except NoSolutionError:
            continue
        if solution.singular:
            continue
        assert solution.theta_pmf.degrees < 0.5, record.id


def test_ridge_angle_folds_near_half_turn():
    assert ridge_angle(-3e-11, -1.0).degrees == 0.0
    assert ridge_angle(-1e-4, -1.0).degrees == pytest.approx(180.0 - math.degrees(1e-4), rel=1e-9)
    assert ridge_angle(-1e-7, -1.0, tol=GVM_TOL).degrees == 0.0
    assert ridge_angle(1.0, 1e-7, tol=GVM_TOL).degrees == pytest.approx(90.0)


def test_lise_uses_azimuth(registry):
    solution = solve_gvm(registry["LISe"], "GVM1")
    assert solution.geometry.angle_name == "phi"
    assert solution.as_row()["angle_name"] == "phi"


def test_op_znse_is_singular(registry):
    solution = solve_gvm(registry["OP-ZnSe"], "GVM1")
    assert solution.singular
    assert math.isnan(solution.theta_pmf.degrees)
    assert solution.as_row()["singular"] is True


def test_theta_pmf_matches_condition(registry):
    solution = solve_gvm(registry["AGS"], "GVM3")
    assert solution.theta_pmf.degrees == pytest.approx(45.0, abs=0.5)
    assert abs(solution.mismatch) < 1e-8
    assert abs(solution.residual) < GVM_TOL


def test_uniaxial_solution_reports_d_eff(registry):
    solution = solve_gvm(registry["AGS"], "GVM1")
    assert solution.d_eff is not None
    assert 0.0 <= solution.geometry.phi <= 90.0


def test_unsatisfied_condition(registry):
    with pytest.raises(NoSolutionError):
        solve_gvm(registry["MgBaF4"], "GVM2")


def test_row_layout(registry):
    row = solve_gvm(registry["KTP"], "GVM3").as_row()
    assert row["crystal"] == "KTP"
    assert row["status"] == "ok"
    assert row["angle_deg"] is None
    assert row["signal_nm"] == pytest.approx(2 * row["pump_nm"])
    assert row["purity"] is None


# solver facade
def test_easy_solver_returns_none_when_unsatisfied():
    solver = EasyGVMSolver()
    assert solver.solve("MgBaF4", "GVM2") is None
    assert solver.solve("KTP", "GVM1").period == pytest.approx(70.0, rel=0.01)
    assert "KTP" in solver.matchers


def test_easy_solver_solve_all():
    results = EasyGVMSolver().solve_all("KTP")
    assert list(results) == ["GVM1", "GVM2", "GVM3"]
    assert all(solution is not None for solution in results.values())


# matched pump
def test_matched_bandwidth_inverts_pump_width(registry):
    record = registry["PMN-0.38PT"]
    solution = solve_gvm(record, "GVM3")
    bandwidth = matched_pump_bandwidth(record, solution, 100.0)
    g1, g2 = gvm_terms(record, solution.interaction, solution.geometry, solution.triple)
    target = math.sqrt(2 / 0.193) / (max(abs(g1), abs(g2)) * 100.0e3)
    assert PumpSpec(solution.triple.pump, bandwidth).sigma == pytest.approx(target, rel=1e-9)
    assert matched_pump_bandwidth(record, solution, 200.0) < bandwidth


@pytest.mark.parametrize("crystal", ["KTP", "AGS"])
def test_swapped_branches_swap_gvm1_and_gvm2(registry, crystal):
    record = registry[crystal]
    swapped = record.interaction.interaction.swapped()
    for condition, partner in (("GVM1", "GVM2"), ("GVM2", "GVM1")):
        direct = solve_gvm(record, partner)
        mirrored = solve_gvm(record, condition, interaction=swapped)
        assert mirrored.triple.pump == pytest.approx(direct.triple.pump, rel=1e-6)
        assert mirrored.theta_pmf.degrees == pytest.approx(TARGET_ANGLES[condition], abs=0.5)
    gvm3 = solve_gvm(record, "GVM3", interaction=swapped)
    assert gvm3.triple.pump == pytest.approx(solve_gvm(record, "GVM3").triple.pump, rel=1e-6)


def test_op_znse_conditions_converge(registry):
    record = registry["OP-ZnSe"]
    solutions = [solve_gvm(record, condition) for condition in CONDITIONS]
    for solution in solutions:
        assert solution.singular
        assert solution.triple.pump == pytest.approx(3.403, abs=0.005)
        assert solution.period == pytest.approx(262.85, rel=0.01)
    assert [s.triple.pump for s in solutions] == pytest.approx([solutions[0].triple.pump] * 3, rel=1e-9)
