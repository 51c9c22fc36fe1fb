"""
Term-list dispersion models.

A model is an ordered list of terms whose sum is n^2(lambda), with wavelength in
micrometers. Each term also knows its analytic derivative, so group indices never
rely on finite differences.
"""
import logging
from typing import Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_serializer, model_validator

from .config import SPEED_OF_LIGHT
from .exceptions import ModelIntegrityError, WavelengthRangeError

logger = logging.getLogger(__name__)

ArrayOrFloat = Union[float, np.ndarray]

# Number of parameters each term kind takes
TERM_ARITY = {"constant": 1, "pole": 2, "resonance": 2, "power": 2}

POLE_GUARD = 1e-12
RANGE_SLACK = 1e-12


class DispersionTerm(BaseModel):
    """
    One additive contribution to n^2:

      - `constant`: A
      - `pole`: B / (lambda^2 - C)
      - `resonance`: B lambda^2 / (lambda^2 - C)
      - `power`: D lambda^k with integer k

    In registry files a term is written as a row `[kind, p1, p2, ...]`.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["constant", "pole", "resonance", "power"]
    params: Tuple[float, ...]

    @model_validator(mode="before")
    @classmethod
    def _from_row(cls, data):
        if isinstance(data, (list, tuple)):
            if not data:
                raise ValueError("empty dispersion term")
            return {"kind": data[0], "params": tuple(data[1:])}
        return data

    @model_validator(mode="after")
    def _check_arity(self):
        expected = TERM_ARITY[self.kind]
        if len(self.params) != expected:
            raise ValueError(
                f"'{self.kind}' term takes {expected} parameter(s), got {len(self.params)}"
            )
        if self.kind == "power" and float(self.params[1]) != int(self.params[1]):
            raise ValueError(f"power exponent must be an integer, got {self.params[1]}")
        return self

    @model_serializer
    def _to_row(self):
        params = list(self.params)
        if self.kind == "power":
            params[1] = int(params[1])
        return [self.kind, *params]

    def _denominator(self, lam2: np.ndarray) -> np.ndarray:
        den = lam2 - self.params[1]
        if np.any(np.abs(den) < POLE_GUARD):
            raise ModelIntegrityError(
                f"{self.kind} term evaluated at its singularity C = {self.params[1]} um^2"
            )
        return den

    def value_and_slope(self, lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        "Contribution to n^2 and to d(n^2)/d(lambda)"
        lam2 = lam * lam
        if self.kind == "constant":
            return np.full_like(lam, self.params[0]), np.zeros_like(lam)
        if self.kind == "pole":
            b = self.params[0]
            den = self._denominator(lam2)
            return b / den, -2.0 * lam * b / den ** 2
        if self.kind == "resonance":
            b, c = self.params
            den = self._denominator(lam2)
            return b * lam2 / den, -2.0 * lam * b * c / den ** 2
        d, k = self.params[0], int(self.params[1])
        return d * lam ** k, k * d * lam ** (k - 1)


class DispersionModel(BaseModel):
    """
    Sum-of-terms model for one principal axis, valid on `valid_range` (micrometers,
    bounds inclusive). All evaluation methods accept scalars or numpy arrays.
    """

    model_config = ConfigDict(frozen=True)

    terms: Tuple[DispersionTerm, ...]
    valid_range: Tuple[float, float]

    @model_validator(mode="after")
    def _check_range(self):
        lo, hi = self.valid_range
        if not 0 < lo < hi:
            raise ValueError(f"valid_range must satisfy 0 < lower < upper, got {self.valid_range}")
        return self

    def check_range(self, lam: ArrayOrFloat, what: str = "") -> None:
        "Raise `WavelengthRangeError` for the first wavelength outside `valid_range`"
        lo, hi = self.valid_range
        arr = np.atleast_1d(np.asarray(lam, dtype=float))
        bad = (arr < lo * (1 - RANGE_SLACK)) | (arr > hi * (1 + RANGE_SLACK)) | ~np.isfinite(arr)
        if np.any(bad):
            raise WavelengthRangeError(float(arr[bad][0]), self.valid_range, what)

    def n_squared(self, lam: ArrayOrFloat) -> Tuple[np.ndarray, np.ndarray]:
        "n^2 and its wavelength derivative, without range checking"
        lam = np.asarray(lam, dtype=float)
        total, slope = np.zeros_like(lam), np.zeros_like(lam)
        for term in self.terms:
            value, dvalue = term.value_and_slope(lam)
            total = total + value
            slope = slope + dvalue
        return total, slope

    def index_and_slope(self, lam: ArrayOrFloat, check: bool = True) -> Tuple[ArrayOrFloat, ArrayOrFloat]:
        """
        Refractive index n and dn/d(lambda) in 1/um.

        Raises `WavelengthRangeError` outside `valid_range` (when `check`) and
        `ModelIntegrityError` where the term sum goes negative.
        """
        if check:
            self.check_range(lam)
        s, ds = self.n_squared(lam)
        if np.any(s <= 0):
            bad = np.atleast_1d(np.asarray(lam, dtype=float))[np.atleast_1d(s) <= 0][0]
            raise ModelIntegrityError(f"negative n^2 at {bad:.6g} um")
        n = np.sqrt(s)
        dn = ds / (2.0 * n)
        if n.ndim == 0:
            return float(n), float(dn)
        return n, dn

    def index(self, lam: ArrayOrFloat, check: bool = True) -> ArrayOrFloat:
        return self.index_and_slope(lam, check)[0]

    def derivative(self, lam: ArrayOrFloat, check: bool = True) -> ArrayOrFloat:
        return self.index_and_slope(lam, check)[1]

    def group_index(self, lam: ArrayOrFloat, check: bool = True) -> ArrayOrFloat:
        "n_g = n - lambda dn/d(lambda)"
        n, dn = self.index_and_slope(lam, check)
        return n - np.asarray(lam, dtype=float) * dn

    def inverse_group_velocity(self, lam: ArrayOrFloat, check: bool = True) -> ArrayOrFloat:
        "1/v_g in fs/um"
        return self.group_index(lam, check) / SPEED_OF_LIGHT

    def susceptibility(self, lam: ArrayOrFloat, check: bool = True) -> ArrayOrFloat:
        "Linear susceptibility chi = n^2 - 1"
        n = self.index(lam, check)
        return n * n - 1.0

    @classmethod
    def constant(cls, value: float, valid_range: Tuple[float, float] = (0.1, 100.0)) -> "DispersionModel":
        "Model with a single constant n^2 term, handy for tests and examples"
        return cls(terms=(DispersionTerm(kind="constant", params=(value,)),), valid_range=valid_range)
