"""
Batch GVM survey: every crystal of a registry against every condition, split
into birefringent and quasi-phase-matched summary tables.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import pandas as pd
from fastcore.parallel import parallel

from .exceptions import NoSolutionError, SpdcError
from .file_utils import Tqdm, write_csv, write_json
from .gvm import CONDITIONS, solve_gvm
from .registry import CrystalRecord, CrystalRegistry

logger = logging.getLogger(__name__)

SURVEY_COLUMNS = [
    "crystal",
    "method",
    "condition",
    "status",
    "pump_nm",
    "signal_nm",
    "idler_nm",
    "angle_name",
    "angle_deg",
    "period_um",
    "theta_pmf_deg",
    "singular",
    "d_eff_pm_per_V",
    "purity",
]

NOT_SATISFIED = "not satisfied"
CONVERGENT = "all conditions"
SOLVED_STATUSES = ("ok", CONVERGENT)
CONVERGENCE_PUMP_NM = 1.0
ALL_CONDITIONS = "all"
RANGE_COLUMNS = ("pump_nm", "signal_nm", "idler_nm", "period_um")


def _empty_row(record: CrystalRecord, condition: str, status: str) -> Dict[str, object]:
    row = {column: None for column in SURVEY_COLUMNS}
    row.update(crystal=record.id, method=record.interaction.method, condition=condition, status=status)
    return row


def survey_crystal(
    record: CrystalRecord,
    conditions: Sequence[str] = CONDITIONS,
    purity: bool = True,
    pump_range: Optional[Tuple[float, float]] = None,
) -> List[Dict[str, object]]:
    "One row per condition; failures become rows instead of exceptions"
    rows = []
    for condition in conditions:
        try:
            rows.append(solve_gvm(record, condition, pump_range=pump_range, purity=purity).as_row())
        except NoSolutionError as exc:
            logger.info("%s %s: %s", record.id, condition, exc)
            rows.append(_empty_row(record, condition, NOT_SATISFIED))
        except SpdcError as exc:
            logger.warning("%s %s failed: %s", record.id, condition, exc)
            rows.append(_empty_row(record, condition, f"error: {exc}"))
    return merge_convergent(rows)


def merge_convergent(rows: List[Dict[str, object]]) -> List[Dict[str, object]]:
    """
    Singular solutions at one pump wavelength satisfy every condition at once;
    they are reported as a single row with status `all conditions` and the
    condition names joined by `+`.
    """
    singular = [row for row in rows if row.get("singular") is True]
    if len(singular) < 2:
        return rows
    first = singular[0]
    if any(abs(row["pump_nm"] - first["pump_nm"]) > CONVERGENCE_PUMP_NM for row in singular[1:]):
        return rows
    merged = dict(first, condition="+".join(row["condition"] for row in singular), status=CONVERGENT)
    logger.info("%s: %s converge at %.1f nm", first["crystal"], merged["condition"], first["pump_nm"])
    return [merged if row is first else row for row in rows if row is first or row.get("singular") is not True]


def survey(
    registry: Union[CrystalRegistry, Sequence[CrystalRecord]],
    conditions: Sequence[str] = CONDITIONS,
    purity: bool = True,
    workers: int = 0,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Solve every condition for every crystal with a default interaction.

    Returns the BPM and QPM tables in registry order. With `workers` > 0 crystals
    are solved in that many processes.
    """
    records = list(registry.values()) if isinstance(registry, dict) else list(registry)
    records = [r for r in records if r.interaction is not None]
    if workers > 0 and len(records) > 1:
        results = parallel(survey_crystal, records, conditions=conditions, purity=purity, n_workers=workers, progress=False)
    else:
        results = [survey_crystal(r, conditions, purity) for r in Tqdm.tqdm(records, desc="survey", disable=not records)]
    rows = [row for crystal_rows in results for row in crystal_rows]
    frame = pd.DataFrame(rows, columns=SURVEY_COLUMNS)
    bpm = frame[frame["method"] == "bpm"].reset_index(drop=True)
    qpm = frame[frame["method"] == "qpm"].reset_index(drop=True)
    logger.info("survey: %d BPM rows, %d QPM rows", len(bpm), len(qpm))
    return bpm, qpm


def survey_ranges(frame: pd.DataFrame) -> Dict[str, Dict[str, object]]:
    """
    Per condition: solved count and the extremes of the pump, down-converted
    (signal and idler) wavelengths and poling periods, plus an `all` entry
    covering every condition.
    """
    ranges = {}
    groups = list(frame.groupby("condition", sort=True))
    if len(frame):
        groups.append((ALL_CONDITIONS, frame))
    for condition, group in groups:
        solved = group[group["status"].isin(SOLVED_STATUSES)]
        entry = {"solved": int(len(solved)), "rows": int(len(group))}
        for column in RANGE_COLUMNS:
            values = pd.to_numeric(solved[column], errors="coerce").dropna()
            if len(values):
                entry[column] = [float(values.min()), float(values.max())]
        ranges[condition] = entry
    return ranges


def save_survey(bpm: pd.DataFrame, qpm: pd.DataFrame, directory: Union[str, Path], fmt: str = "csv") -> List[Path]:
    "Write `survey_bpm` and `survey_qpm` tables plus `survey_summary.json`"
    directory = Path(directory)
    if fmt == "json":
        outputs = [
            write_json({"rows": bpm.to_dict(orient="records")}, directory / "survey_bpm.json"),
            write_json({"rows": qpm.to_dict(orient="records")}, directory / "survey_qpm.json"),
        ]
    else:
        outputs = [write_csv(bpm, directory / "survey_bpm.csv"), write_csv(qpm, directory / "survey_qpm.csv")]
    summary = {"bpm": survey_ranges(bpm), "qpm": survey_ranges(qpm)}
    outputs.append(write_json(summary, directory / "survey_summary.json"))
    return outputs
