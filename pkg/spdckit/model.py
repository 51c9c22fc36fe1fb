from abc import ABC, abstractmethod
from typing import Optional

from .photons import Interaction, PhotonTriple
from .registry import CrystalRecord, CrystalRegistry, load_registry


class PhaseMatcher(ABC):
    """
    Base class binding one crystal record to an SPDC interaction.

    Subclasses implement the phase-matching method (birefringent or
    quasi-phase-matched); `load` is the alternative constructor from a crystal id.
    """

    def __init__(self, record: CrystalRecord, interaction: Optional[Interaction] = None):
        self.record = record
        spec = record.interaction
        if interaction is None:
            if spec is None:
                raise ValueError(f"{record.id} has no default interaction; pass one explicitly")
            interaction = spec.interaction
        self.interaction = interaction

    @property
    def crystal_id(self) -> str:
        return self.record.id

    @classmethod
    def load(
        cls,
        crystal_id: str,
        registry: Optional[CrystalRegistry] = None,
        interaction: Optional[Interaction] = None,
    ) -> "PhaseMatcher":
        """ Load a crystal from `registry` (default: the configured registry) """
        registry = load_registry() if registry is None else registry
        return cls(registry[crystal_id], interaction)

    @abstractmethod
    def delta_k(self, geometry, triple: PhotonTriple) -> float:
        """ Phase mismatch in rad/um """
        raise NotImplementedError("Please Implement this method")

    @abstractmethod
    def phase_match(self, triple: PhotonTriple):
        """ Solve for the geometry that phase-matches `triple` """
        raise NotImplementedError("Please Implement this method")

    @abstractmethod
    def solve_gvm(self, condition: str, pump_range=None):
        """ Solve one group-velocity-matching condition """
        raise NotImplementedError("Please Implement this method")

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.record.id!r}, {self.interaction})"
