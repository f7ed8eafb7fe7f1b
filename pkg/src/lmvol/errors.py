"""Exception hierarchy and small verdict types shared across modules."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class LmvolError(Exception):
    """Base class. ``where`` names the module/operation that raised."""

    kind = "error"

    def __init__(self, message: str, where: str = ""):
        super().__init__(message)
        self.where = where

    def to_dict(self) -> dict:
        return {"kind": self.kind, "where": self.where, "message": str(self)}


class ConfigError(LmvolError):
    kind = "config"


class DomainError(LmvolError):
    kind = "numerical-precondition"


class TailUndeterminedError(LmvolError):
    kind = "numerical-precondition"


class GridError(LmvolError):
    kind = "numerical-precondition"


class UnbalancedError(ConfigError):
    pass


class StationarityError(LmvolError):
    """Raised when an operation needs an asymptotically stationary model."""

    kind = "numerical-precondition"

    def __init__(self, verdict, where: str = ""):
        super().__init__(f"model is not stationary: {verdict}", where)
        self.verdict = verdict


class UnsupportedRegimeError(LmvolError):
    kind = "numerical-precondition"


class ToleranceError(LmvolError):
    kind = "tolerance-failure"


# -- integral / series verdicts ---------------------------------------------


@dataclass(frozen=True)
class Finite:
    value: float


@dataclass(frozen=True)
class Divergent:
    reason: str = ""


@dataclass(frozen=True)
class Infinite:
    reason: str = ""


@dataclass(frozen=True)
class Undetermined:
    reason: str = ""


# -- stationarity ------------------------------------------------------------

KERNEL_NOT_L2 = "KernelNotL2"
MARGIN_AT_LEAST_ONE = "MarginAtLeastOne"
UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Stationary:
    margin: float
    near_critical: bool = False


@dataclass(frozen=True)
class NonStationary:
    reason: str
    margin: float | None = None


class MemoryClass(str, enum.Enum):
    SHORT = "short"
    LONG = "long"
    UNDETERMINED = "undetermined"
