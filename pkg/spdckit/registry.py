"""
Crystal registry: schema, loading, validation and serialization.

The registry is a multi-document YAML file, one document per crystal. The bundled
file lives at `spdckit/data/crystals.yaml`; see `docs/registry-schema.md` for the
field reference.
"""
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .config import registry_path
from .dispersion import DispersionModel
from .exceptions import (
    DuplicateCrystalError,
    ModelIntegrityError,
    RegistryParseError,
    RegistryValidationError,
    UnknownCrystalError,
    WavelengthRangeError,
)
from .photons import Interaction

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

CLASS_AXES = {
    "uniaxial-positive": ("e", "o"),
    "uniaxial-negative": ("e", "o"),
    "biaxial": ("x", "y", "z"),
    "isotropic": ("n",),
}

OpticalClass = Literal["uniaxial-positive", "uniaxial-negative", "biaxial", "isotropic"]


class NonlinearEntry(BaseModel):
    "One measured nonlinear coefficient in pm/V; the sign is kept as tabulated"

    model_config = ConfigDict(frozen=True, extra="forbid")

    tensor_label: str
    magnitude: float
    measurement_wavelength: float = Field(gt=0)
    uncertainty: Optional[float] = None


class InteractionSpec(BaseModel):
    """
    Default SPDC interaction for a crystal: phase-matching method, principal plane
    for biaxial BPM, and the branch of each wave.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: Literal["bpm", "qpm"]
    type_tag: Literal["type-0", "type-I", "type-II"]
    plane: Optional[Literal["xy", "xz", "yz"]] = None
    pump: str
    signal: str
    idler: str

    @property
    def interaction(self) -> Interaction:
        return Interaction(self.type_tag, self.pump, self.signal, self.idler)


class CrystalRecord(BaseModel):
    """
    Everything the solvers need to know about one crystal. Records are immutable
    once loaded.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = SCHEMA_VERSION
    id: str
    chemical_formula: str
    optical_class: OpticalClass
    point_group: str
    transparency: Tuple[float, float]
    dispersion: Dict[str, DispersionModel]
    d_entries: Tuple[NonlinearEntry, ...] = ()
    d_eff_known: bool = True
    interaction: Optional[InteractionSpec] = None
    gvm_search: Optional[Tuple[float, float]] = None
    provenance: Literal["handbook", "surrogate"] = "handbook"
    golden: bool = False
    references: Tuple[str, ...] = ()
    notes: str = ""

    @model_validator(mode="before")
    @classmethod
    def _fill_valid_ranges(cls, data):
        "Axis models default to the transparency window"
        if isinstance(data, dict) and isinstance(data.get("dispersion"), dict):
            window = data.get("transparency")
            filled = {}
            for axis, model in data["dispersion"].items():
                if isinstance(model, dict) and "valid_range" not in model and window is not None:
                    model = {**model, "valid_range": window}
                filled[axis] = model
            data = {**data, "dispersion": filled}
        return data

    @model_validator(mode="after")
    def _check_schema_version(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}, expected {SCHEMA_VERSION}")
        return self

    @property
    def is_uniaxial(self) -> bool:
        return self.optical_class.startswith("uniaxial")

    @property
    def is_biaxial(self) -> bool:
        return self.optical_class == "biaxial"

    @property
    def is_isotropic(self) -> bool:
        return self.optical_class == "isotropic"

    def model(self, axis: str) -> DispersionModel:
        try:
            return self.dispersion[axis]
        except KeyError:
            raise RegistryValidationError(
                f"Crystal '{self.id}' has no dispersion axis '{axis}' (axes: {', '.join(sorted(self.dispersion))})"
            ) from None

    def refractive_index(self, axis: str, wavelength):
        return refractive_index(self, axis, wavelength)

    def transparency_check(self, wavelengths: Iterable[float]) -> List[bool]:
        return transparency_check(self, wavelengths)

    def in_transparency(self, wavelength: float) -> bool:
        lo, hi = self.transparency
        return lo <= wavelength <= hi

    def validate_invariants(self, samples: int = 200) -> None:
        """
        Check the physical invariants the schema cannot express. Raises
        `RegistryValidationError` on the first breach.
        """
        lo, hi = self.transparency
        if not 0 < lo < hi:
            raise RegistryValidationError(
                f"Crystal '{self.id}': transparency must satisfy 0 < lower < upper, got {self.transparency}"
            )
        expected = set(CLASS_AXES[self.optical_class])
        if set(self.dispersion) != expected:
            raise RegistryValidationError(
                f"Crystal '{self.id}': {self.optical_class} needs axes {sorted(expected)}, got {sorted(self.dispersion)}"
            )
        grid = np.linspace(lo, hi, samples)
        for axis, model in self.dispersion.items():
            try:
                n = model.index(grid[(grid >= model.valid_range[0]) & (grid <= model.valid_range[1])])
            except ModelIntegrityError as exc:
                raise RegistryValidationError(f"Crystal '{self.id}', axis '{axis}': {exc}") from exc
            if np.any(~np.isfinite(n)) or np.any(n < 1.0):
                raise RegistryValidationError(
                    f"Crystal '{self.id}', axis '{axis}': refractive index below 1 inside the transparency window"
                )
        if self.gvm_search is not None and not 0 < self.gvm_search[0] < self.gvm_search[1]:
            raise RegistryValidationError(f"Crystal '{self.id}': gvm_search must be an increasing interval")
        if self.is_uniaxial:
            mid = 0.5 * (lo + hi)
            birefringence = float(self.dispersion["e"].index(mid, check=False) - self.dispersion["o"].index(mid, check=False))
            if birefringence == 0.0 or (birefringence < 0) != (self.optical_class == "uniaxial-negative"):
                raise RegistryValidationError(
                    f"Crystal '{self.id}': {self.optical_class} but n_e - n_o = {birefringence:+.4g} at {mid:.4g} um"
                )


class CrystalRegistry(dict):
    """
    Mapping of crystal id to `CrystalRecord`. Looking up a missing id raises
    `UnknownCrystalError` listing the available ids.
    """

    def __init__(self, records: Iterable[CrystalRecord] = (), source: Optional[Path] = None):
        super().__init__()
        self.source = source
        for record in records:
            if record.id in self:
                raise DuplicateCrystalError(record.id)
            self[record.id] = record

    def __missing__(self, key):
        raise UnknownCrystalError(key, self.keys())

    def by_method(self, method: str) -> List[CrystalRecord]:
        "Records whose default interaction uses `method` (bpm or qpm), in file order"
        return [r for r in self.values() if r.interaction is not None and r.interaction.method == method]


def _parse_record(document: dict, position: int) -> CrystalRecord:
    name = str(document.get("id", f"document {position}")) if isinstance(document, dict) else f"document {position}"
    if not isinstance(document, dict):
        raise RegistryParseError(name, "<document>", "expected a mapping")
    if "schema_version" not in document:
        raise RegistryParseError(name, "schema_version", "field required")
    if document["schema_version"] != SCHEMA_VERSION:
        raise RegistryParseError(
            name, "schema_version", f"unsupported version {document['schema_version']!r}, expected {SCHEMA_VERSION}"
        )
    try:
        return CrystalRecord.model_validate(document)
    except ValidationError as exc:
        error = exc.errors()[0]
        field = ".".join(str(part) for part in error["loc"]) or "<document>"
        raise RegistryParseError(name, field, error["msg"]) from None


def load_registry(path: Union[str, Path, None] = None) -> CrystalRegistry:
    """
    Load and validate a registry file.

    `path` defaults to `$SPDCKIT_REGISTRY`, then the bundled registry. An empty
    file gives an empty registry.
    """
    path = registry_path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            documents = [d for d in yaml.safe_load_all(f) if d is not None]
        except yaml.YAMLError as exc:
            raise RegistryParseError(str(path), "<yaml>", str(exc)) from None
    records = []
    for position, document in enumerate(documents):
        record = _parse_record(document, position)
        record.validate_invariants()
        records.append(record)
    registry = CrystalRegistry(records, source=Path(path))
    logger.info("Loaded %d crystal records from %s", len(registry), path)
    return registry


def dump_registry(registry: Union[CrystalRegistry, Iterable[CrystalRecord]], path: Union[str, Path]) -> Path:
    "Write records in the registry file format; loading the result gives identical records"
    records = registry.values() if isinstance(registry, dict) else registry
    documents = [record.model_dump(mode="json", exclude_none=True) for record in records]
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump_all(documents, f, sort_keys=False, explicit_start=True, allow_unicode=True)
    return path


def refractive_index(record: CrystalRecord, axis: str, wavelength):
    """
    Principal refractive index of `record` on `axis` at `wavelength` (um).

    Raises `WavelengthRangeError` outside the axis model's valid range.
    """
    model = record.model(axis)
    try:
        return model.index(wavelength)
    except WavelengthRangeError as exc:
        raise WavelengthRangeError(exc.wavelength, exc.window, f"{record.id} axis {axis}") from None


def transparency_check(record: CrystalRecord, wavelengths: Iterable[float]) -> List[bool]:
    "True where a wavelength lies inside the (inclusive) transparency window"
    return [record.in_transparency(w) for w in wavelengths]


def default_registry() -> CrystalRegistry:
    return load_registry(None)
