"""
Photon triples and polarization assignments shared by the phase-matching, GVM
and JSA modules.
"""
from dataclasses import dataclass, replace
from typing import Tuple

from .exceptions import GeometryError

ENERGY_TOL = 1e-12

TYPE_TAGS = ("type-0", "type-I", "type-II")

# Branch labels valid for each optical class and propagation kind
UNIAXIAL_BRANCHES = ("o", "e")
BIAXIAL_PLANE_BRANCHES = ("in-plane", "normal")
BIAXIAL_AXIS_BRANCHES = ("x", "y", "z")
ISOTROPIC_BRANCHES = ("n",)


@dataclass(frozen=True)
class PhotonTriple:
    """
    Pump, signal and idler vacuum wavelengths in micrometers, tied together by
    energy conservation 1/pump = 1/signal + 1/idler.
    """

    pump: float
    signal: float
    idler: float

    def __post_init__(self):
        if min(self.pump, self.signal, self.idler) <= 0:
            raise ValueError(f"wavelengths must be positive, got {self.as_tuple()}")
        mismatch = abs(1 / self.pump - 1 / self.signal - 1 / self.idler)
        if mismatch >= ENERGY_TOL:
            raise ValueError(
                f"energy not conserved for {self.as_tuple()}: mismatch {mismatch:.3e} 1/um"
            )

    @classmethod
    def degenerate(cls, pump: float) -> "PhotonTriple":
        return cls(pump, 2.0 * pump, 2.0 * pump)

    @classmethod
    def from_pump_signal(cls, pump: float, signal: float) -> "PhotonTriple":
        "Idler from energy conservation; `signal` must be longer than `pump`"
        if signal <= pump:
            raise ValueError(f"signal {signal} um must be longer than pump {pump} um")
        return cls(pump, signal, 1.0 / (1.0 / pump - 1.0 / signal))

    @property
    def is_degenerate(self) -> bool:
        return abs(self.signal - self.idler) <= 1e-12 * self.signal

    def swapped(self) -> "PhotonTriple":
        return PhotonTriple(self.pump, self.idler, self.signal)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.pump, self.signal, self.idler)


@dataclass(frozen=True)
class Interaction:
    """
    Polarization branch of each wave plus the interaction type.

    Branches are `o`/`e` for uniaxial crystals, `in-plane`/`normal` for biaxial
    principal-plane propagation, `x`/`y`/`z` for biaxial quasi-phase matching and
    `n` for isotropic crystals.
    """

    type_tag: str
    pump: str
    signal: str
    idler: str

    def __post_init__(self):
        if self.type_tag not in TYPE_TAGS:
            raise GeometryError(f"unknown interaction type '{self.type_tag}'")
        if self.type_tag == "type-0" and not (self.pump == self.signal == self.idler):
            raise GeometryError("type-0 interactions need identical pump, signal and idler branches")
        if self.type_tag == "type-II" and self.signal == self.idler:
            raise GeometryError("type-II interactions need different signal and idler branches")

    @property
    def branches(self) -> Tuple[str, str, str]:
        return (self.pump, self.signal, self.idler)

    def swapped(self) -> "Interaction":
        "Exchange the signal and idler branches"
        return replace(self, signal=self.idler, idler=self.signal)

    def __str__(self) -> str:
        return f"{self.type_tag} {self.pump}->{self.signal}+{self.idler}"
