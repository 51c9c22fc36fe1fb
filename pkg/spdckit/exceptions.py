"""
Exceptions raised by spdckit.

Everything derives from `SpdcError` so callers (the CLI in particular) can catch
library failures in one place. Errors about bad inputs also derive from
`ValueError`.
"""
from typing import Iterable, Optional, Tuple


class SpdcError(Exception):
    """Base class for all spdckit errors"""


class RegistryError(SpdcError):
    """Problem with a crystal registry file"""


class RegistryParseError(RegistryError):
    """A registry document does not match the schema"""

    def __init__(self, record: str, field: str, message: str):
        self.record = record
        self.field = field
        super().__init__(f"Crystal '{record}', field '{field}': {message}")


class RegistryValidationError(RegistryError):
    """A registry record parsed but breaks a physical invariant"""


class DuplicateCrystalError(RegistryValidationError):
    def __init__(self, crystal_id: str):
        self.crystal_id = crystal_id
        super().__init__(f"Duplicate crystal id '{crystal_id}' in registry")


class UnknownCrystalError(SpdcError, KeyError):
    def __init__(self, crystal_id: str, available: Iterable[str]):
        self.crystal_id = crystal_id
        self.available = sorted(available)
        super().__init__(
            f"Unknown crystal '{crystal_id}'. Available: {', '.join(self.available)}"
        )

    def __str__(self) -> str:
        return self.args[0]


class WavelengthRangeError(SpdcError, ValueError):
    """Wavelength outside a dispersion model's valid range"""

    def __init__(self, wavelength: float, window: Tuple[float, float], what: str = ""):
        self.wavelength = wavelength
        self.window = tuple(window)
        prefix = f"{what}: " if what else ""
        super().__init__(
            f"{prefix}wavelength {wavelength:.6g} um outside "
            f"[{self.window[0]:.6g}, {self.window[1]:.6g}] um"
        )


class ModelIntegrityError(SpdcError):
    """Dispersion model produced a pole hit or a negative n^2"""


class GeometryError(SpdcError, ValueError):
    """Geometry or polarization branch incompatible with the crystal"""


class NoSolutionError(SpdcError):
    """A root search found no sign change"""

    def __init__(self, message: str, extrema: Optional[Tuple[float, float]] = None):
        self.extrema = extrema
        if extrema is not None:
            message = f"{message} (residual range [{extrema[0]:.6g}, {extrema[1]:.6g}])"
        super().__init__(message)


class DegenerateGratingError(SpdcError):
    """Zero phase mismatch, the poling period would be infinite"""


class UnsupportedPointGroupError(SpdcError):
    pass


class GridError(SpdcError, ValueError):
    """JSA grid specification is invalid or leaves the transparency window"""


class AxisMismatchError(SpdcError, ValueError):
    pass


class UndefinedPurityError(SpdcError):
    pass
