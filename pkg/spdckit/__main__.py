"""
spdckit command line.

    spdckit info AGS
    spdckit pm KTP --pump-um 0.792
    spdckit gvm AGSe --condition GVM2
    spdckit map OP-ZnSe --pump-min-um 2.5 --pump-max-um 4.5 --signal-min-um 5 --signal-max-um 9
    spdckit survey --workers 4
    spdckit --grid 200 jsa BaTiO3 --condition GVM1 --length-mm 100 --pump-bw-nm 4
    spdckit hom PMN-0.38PT --condition GVM3 --pump-bw-nm 11 --mode two-fold
"""
import functools
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import click
import pandas as pd

from . import __version__
from .config import DEFAULT_DELAY_POINTS, DEFAULT_GRID_SIZE, registry_path
from .exceptions import SpdcError
from .file_utils import RunManifest, Tqdm, file_sha256, write_csv, write_json
from .gvm import CONDITIONS, solve_gvm
from .hom import default_delays, four_fold_trace, two_fold_trace
from .jsa import GridSpec, PumpSpec, marginals_fwhm, schmidt_purity, solution_jsa
from .phasematch import phase_matcher_for, pm_map
from .photons import PhotonTriple
from .registry import CrystalRegistry, load_registry
from .survey import SOLVED_STATUSES, SURVEY_COLUMNS, save_survey, survey, survey_crystal

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(process)d-%(levelname)s-%(message)s"


@dataclass
class RunContext:
    "Global options shared by every command"

    registry_file: Path
    out: Path
    grid: int
    fmt: str
    _registry: Optional[CrystalRegistry] = field(default=None, repr=False)

    @property
    def registry(self) -> CrystalRegistry:
        if self._registry is None:
            self._registry = load_registry(self.registry_file)
        return self._registry

    def manifest(self, ctx: click.Context, outputs: List[Path]) -> Path:
        "Write `<command>_manifest.json` next to the outputs"
        parameters = {f"global.{k}": v for k, v in ctx.parent.params.items() if k != "verbose"}
        parameters.update(ctx.params)
        parameters["global.registry"] = str(self.registry_file)
        manifest = RunManifest(
            command=ctx.command_path.split(),
            registry_path=str(self.registry_file),
            registry_sha256=file_sha256(self.registry_file),
            parameters=json.loads(json.dumps(parameters, default=str)),
            version=__version__,
            outputs=[os.path.relpath(p, self.out) for p in outputs],
        )
        return manifest.save(self.out / f"{ctx.info_name}_manifest.json")


def _handle_errors(func):
    "Report library errors as click errors (exit status 1)"

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (SpdcError, ValueError) as exc:
            raise click.ClickException(str(exc)) from None

    return wrapper


@click.group()
@click.version_option(version=__version__, prog_name="spdckit")
@click.option("--registry", type=click.Path(dir_okay=False), default=None, help="Crystal registry YAML (default: $SPDCKIT_REGISTRY, then the bundled file)")
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True, help="Output directory")
@click.option("--grid", type=int, default=DEFAULT_GRID_SIZE, show_default=True, help="JSA grid size N (N x N)")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True, help="Table format")
@click.option("--verbose", is_flag=True, help="Log progress at INFO level")
@click.pass_context
def _main(ctx, registry, out, grid, fmt, verbose):
    """
    Phase matching, group-velocity matching and spectral purity of SPDC sources
    in nonlinear crystals.
    """
    logging.basicConfig(format=LOG_FORMAT, level=logging.INFO if verbose else logging.WARNING)
    Tqdm.set_slower_interval(not click.get_text_stream("stderr").isatty())
    ctx.obj = RunContext(registry_path(registry), Path(out), grid, fmt)


def _emit(fmt: str, data) -> None:
    if fmt == "json" and isinstance(data, pd.DataFrame):
        data = data.to_dict(orient="records")
    if fmt == "json":
        click.echo(json.dumps(data, indent=2, default=str))
    elif isinstance(data, pd.DataFrame):
        click.echo(data.to_string(index=False) if len(data) else "(no rows)")
    else:
        for key, value in data.items():
            click.echo(f"{key}: {value}")


def _table(frame: pd.DataFrame, path: Path, fmt: str) -> Path:
    if fmt == "json":
        return write_json({"rows": frame.to_dict(orient="records")}, path.with_suffix(".json"))
    return write_csv(frame, path.with_suffix(".csv"))


@_main.command()
@click.argument("crystal")
@click.pass_obj
@_handle_errors
def info(run: RunContext, crystal):
    "Show a crystal record"
    record = run.registry[crystal]
    lo, hi = record.transparency
    entries = [
        f"{e.tensor_label} = {e.magnitude:g} pm/V @ {e.measurement_wavelength:g} um" for e in record.d_entries
    ]
    data = {
        "id": record.id,
        "formula": record.chemical_formula,
        "optical class": record.optical_class,
        "point group": record.point_group,
        "transparency": f"{lo}-{hi} um",
        "axes": ", ".join(sorted(record.dispersion)),
        "nonlinear coefficients": "; ".join(entries) or "unknown",
        "d_eff": "tabulated" if record.d_eff_known and entries else "unknown",
        "provenance": record.provenance,
    }
    if record.interaction is not None:
        spec = record.interaction
        data["interaction"] = f"{spec.method} {spec.interaction}" + (f" in {spec.plane}" if spec.plane else "")
    if record.gvm_search is not None:
        data["gvm search"] = f"{record.gvm_search[0]}-{record.gvm_search[1]} um"
    if record.notes:
        data["notes"] = record.notes
    _emit(run.fmt, data)


@_main.command()
@click.argument("crystal")
@click.option("--pump-um", type=float, required=True, help="Pump wavelength (um)")
@click.option("--signal-um", type=float, default=None, help="Signal wavelength (um), degenerate when omitted")
@click.pass_obj
@_handle_errors
def pm(run: RunContext, crystal, pump_um, signal_um):
    "Phase-matching angles (BPM) or first-order poling period (QPM)"
    record = run.registry[crystal]
    triple = PhotonTriple.degenerate(pump_um) if signal_um is None else PhotonTriple.from_pump_signal(pump_um, signal_um)
    matcher = phase_matcher_for(record)
    data = {"crystal": record.id, "interaction": str(matcher.interaction), "wavelengths_um": list(triple.as_tuple())}
    if record.interaction.method == "qpm":
        data["period_um"] = matcher.phase_match(triple).period
    else:
        data["angle_name"] = matcher.geometry(45.0).angle_name
        data["angles_deg"] = matcher.phase_match(triple)
    _emit(run.fmt, data)


@_main.command()
@click.argument("crystal")
@click.option("--condition", type=click.Choice(CONDITIONS + ("all",), case_sensitive=False), default="all", show_default=True)
@click.option("--pump-min-um", type=float, default=None, help="Lower end of the pump search window (um)")
@click.option("--pump-max-um", type=float, default=None, help="Upper end of the pump search window (um)")
@click.option("--purity/--no-purity", default=True, show_default=True, help="Also compute the predicted purity")
@click.pass_context
@_handle_errors
def gvm(ctx, crystal, condition, pump_min_um, pump_max_um, purity):
    "Solve GVM conditions; unsatisfiable ones are reported as rows, coinciding singular ones as one row"
    run: RunContext = ctx.obj
    record = run.registry[crystal]
    conditions = CONDITIONS if condition.lower() == "all" else (condition.upper(),)
    pump_range = None
    if pump_min_um is not None or pump_max_um is not None:
        pump_range = (pump_min_um or 0.0, pump_max_um or float("inf"))
    rows = survey_crystal(record, conditions, purity=purity, pump_range=pump_range)
    frame = pd.DataFrame(rows, columns=SURVEY_COLUMNS)
    outputs = [_table(frame, run.out / f"gvm_{record.id}", run.fmt)]
    run.manifest(ctx, outputs)
    _emit(run.fmt, frame)


@_main.command(name="map")
@click.argument("crystal")
@click.option("--pump-min-um", type=float, required=True)
@click.option("--pump-max-um", type=float, required=True)
@click.option("--signal-min-um", type=float, required=True)
@click.option("--signal-max-um", type=float, required=True)
@click.option("--pump-points", type=int, default=50, show_default=True)
@click.option("--signal-points", type=int, default=50, show_default=True)
@click.pass_context
@_handle_errors
def map_(ctx, crystal, pump_min_um, pump_max_um, signal_min_um, signal_max_um, pump_points, signal_points):
    "Poling period and ridge angle over a (pump, signal) grid"
    run: RunContext = ctx.obj
    record = run.registry[crystal]
    result = pm_map(
        record,
        record.interaction.interaction,
        (pump_min_um, pump_max_um),
        (signal_min_um, signal_max_um),
        (pump_points, signal_points),
    )
    outputs = result.save(run.out, f"map_{record.id}")
    run.manifest(ctx, outputs)
    click.echo(f"{record.id}: {result.shape[0]}x{result.shape[1]} map written to {run.out}")


@_main.command(name="survey")
@click.option("--workers", type=int, default=0, show_default=True, help="Worker processes (0 solves serially)")
@click.option("--purity/--no-purity", default=True, show_default=True)
@click.pass_context
@_handle_errors
def survey_(ctx, workers, purity):
    "Solve every condition for every crystal; writes the BPM and QPM tables"
    run: RunContext = ctx.obj
    bpm, qpm = survey(run.registry, purity=purity, workers=workers)
    outputs = save_survey(bpm, qpm, run.out, run.fmt)
    run.manifest(ctx, outputs)
    for name, frame in (("BPM", bpm), ("QPM", qpm)):
        solved = int(frame["status"].isin(SOLVED_STATUSES).sum())
        click.echo(f"{name}: {solved}/{len(frame)} conditions satisfied")


def _source(run: RunContext, crystal: str, condition: str, length_mm, pump_bw_nm, square: bool):
    record = run.registry[crystal]
    solution = solve_gvm(record, condition)
    pump = PumpSpec(solution.triple.pump, pump_bw_nm * 1e-3) if pump_bw_nm is not None else None
    grid = solution_jsa(record, solution, GridSpec(size=run.grid, square=square), pump, length_mm)
    return record, solution, grid


_source_options = [
    click.argument("crystal"),
    click.option("--condition", type=click.Choice(CONDITIONS, case_sensitive=False), required=True),
    click.option("--length-mm", type=float, default=None, help="Crystal length (mm), default per condition"),
    click.option("--pump-bw-nm", type=float, default=None, help="Pump bandwidth parameter (nm), default per condition"),
]


def source_options(func):
    for option in reversed(_source_options):
        func = option(func)
    return func


@_main.command()
@source_options
@click.option("--square", is_flag=True, help="Identical signal and idler axes")
@click.pass_context
@_handle_errors
def jsa(ctx, crystal, condition, length_mm, pump_bw_nm, square):
    "Joint spectral intensity, marginals and purity of a GVM source"
    run: RunContext = ctx.obj
    record, solution, grid = _source(run, crystal, condition.upper(), length_mm, pump_bw_nm, square)
    outputs = grid.save(run.out, f"jsa_{record.id}_{solution.condition}")
    run.manifest(ctx, outputs)
    marginals = marginals_fwhm(grid)
    _emit(
        run.fmt,
        {
            "crystal": record.id,
            "condition": solution.condition,
            "purity": schmidt_purity(grid),
            "signal_fwhm_nm": marginals.signal_fwhm * 1e3,
            "idler_fwhm_nm": marginals.idler_fwhm * 1e3,
        },
    )


@_main.command()
@source_options
@click.option("--mode", type=click.Choice(["two-fold", "signals", "idlers"]), default="signals", show_default=True)
@click.option("--delays", "delay_points", type=int, default=DEFAULT_DELAY_POINTS, show_default=True, help="Number of delays")
@click.option("--max-delay-fs", type=float, default=None, help="Sweep +/- this delay instead of the automatic range")
@click.pass_context
@_handle_errors
def hom(ctx, crystal, condition, length_mm, pump_bw_nm, mode, delay_points, max_delay_fs):
    "Two-fold or four-fold HOM dip of a GVM source"
    run: RunContext = ctx.obj
    record, solution, grid = _source(run, crystal, condition.upper(), length_mm, pump_bw_nm, mode == "two-fold")
    if max_delay_fs is not None:
        delays = [max_delay_fs * (2.0 * k / (delay_points - 1) - 1.0) for k in range(delay_points)]
    else:
        delays = default_delays(grid, mode, delay_points)
    trace = two_fold_trace(grid, delays) if mode == "two-fold" else four_fold_trace(grid, grid, delays, mode)
    outputs = trace.save(
        run.out,
        f"hom_{record.id}_{solution.condition}_{mode}",
        {"condition": solution.condition, "purity": schmidt_purity(grid), **grid.describe()},
    )
    run.manifest(ctx, outputs)
    fwhm = trace.fwhm
    _emit(run.fmt, {"crystal": record.id, "mode": mode, "visibility": trace.visibility, "fwhm_fs": fwhm if fwhm is not None else "absent"})


if __name__ == "__main__":
    _main()
