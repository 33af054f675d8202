"""Evaluation settings: temporal horizon and spatial region."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import product

from shared.exceptions import ConfigurationError

NEAR_EXTENT_METERS = 30.0


class Horizon(str, Enum):
    """Number of future steps evaluated."""

    SHORT = "short"
    MID = "mid"
    LONG = "long"

    @property
    def steps(self) -> int:
        return {"short": 4, "mid": 8, "long": 12}[self.value]


class Region(str, Enum):
    """Evaluated area: a centered crop or the full grid."""

    NEAR = "near"
    FAR = "far"


@dataclass(frozen=True)
class EvalSetting:
    horizon: Horizon
    region: Region

    @property
    def label(self) -> str:
        return f"{self.horizon.value}/{self.region.value}"


def all_settings(horizons: list[Horizon] | None = None) -> list[EvalSetting]:
    """Cartesian product of the horizons (short to long) with both regions."""
    horizons = sorted(horizons or list(Horizon), key=lambda h: h.steps)
    return [EvalSetting(h, r) for h, r in product(horizons, Region)]


def parse_horizons(text: str) -> list[Horizon]:
    """Parse a comma-separated horizon list such as ``"short,mid"``."""
    try:
        return [Horizon(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"unknown horizon in {text!r}", field="settings") from exc
