"""Risk matrix scoring.

Harm types are weighted by severity: distortion x1, revelation x2,
intrusion x3. Each impact level runs 0..5 (0 = harm type absent), so the
raw score tops out at 30 and the normalized score is raw / 30.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

from .core import MarketError

MAX_IMPACT = 5
DISTORTION_WEIGHT = 1
REVELATION_WEIGHT = 2
INTRUSION_WEIGHT = 3
MAX_RAW_SCORE = (DISTORTION_WEIGHT + REVELATION_WEIGHT + INTRUSION_WEIGHT) * MAX_IMPACT


class InvalidImpact(MarketError):
    pass


class InvalidScore(MarketError):
    pass


class RiskBand(str, Enum):
    LOW = "Low"
    MODERATE = "Moderate"
    HIGH = "High"
    CRITICAL = "Critical"


def _check_impact(name: str, value: Any) -> None:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidImpact(f"{name} impact must be an integer, got {value!r}")
    if not 0 <= value <= MAX_IMPACT:
        raise InvalidImpact(f"{name} impact {value} outside [0, {MAX_IMPACT}]")


@dataclass(frozen=True)
class HarmImpactVector:
    distortion_impact: int
    revelation_impact: int
    intrusion_impact: int

    def __post_init__(self):
        _check_impact("distortion", self.distortion_impact)
        _check_impact("revelation", self.revelation_impact)
        _check_impact("intrusion", self.intrusion_impact)

    def to_record(self) -> dict[str, int]:
        return {
            "distortion": self.distortion_impact,
            "revelation": self.revelation_impact,
            "intrusion": self.intrusion_impact,
        }


@dataclass(frozen=True)
class RiskAssessment:
    impacts: HarmImpactVector
    raw_score: int
    normalized: float
    band: RiskBand

    def to_record(self) -> dict[str, Any]:
        return {
            "impacts": self.impacts.to_record(),
            "raw_score": self.raw_score,
            "normalized": self.normalized,
            "band": self.band.value,
        }


def risk_band(normalized: float) -> RiskBand:
    if not 0.0 <= normalized <= 1.0:
        raise InvalidScore(f"normalized score {normalized} outside [0, 1]")
    if normalized < 0.25:
        return RiskBand.LOW
    if normalized < 0.5:
        return RiskBand.MODERATE
    if normalized < 0.75:
        return RiskBand.HIGH
    return RiskBand.CRITICAL


def assess_risk(impacts: HarmImpactVector) -> RiskAssessment:
    raw = (DISTORTION_WEIGHT * impacts.distortion_impact
           + REVELATION_WEIGHT * impacts.revelation_impact
           + INTRUSION_WEIGHT * impacts.intrusion_impact)
    normalized = raw / MAX_RAW_SCORE
    return RiskAssessment(impacts, raw, normalized, risk_band(normalized))
