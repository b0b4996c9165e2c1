"""Personal data licences and the compliance verdict engine."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Optional

from .core import MarketError


class NotYetGranted(MarketError):
    pass


class UnrelatedActor(MarketError):
    pass


class InvalidLicense(MarketError):
    pass


class Purpose(str, Enum):
    PRODUCT_OPTIMIZATION = "ProductOptimization"
    MARKETING_ANALYTICS = "MarketingAnalytics"
    RESEARCH_AGGREGATE = "ResearchAggregate"
    RESALE = "Resale"
    THIRD_PARTY_INFERENCE = "ThirdPartyInference"


class Outcome(str, Enum):
    COMPLIANT = "Compliant"
    VIOLATION = "Violation"


class ViolationKind(str, Enum):
    EXPIRED = "Expired"
    UNPERMITTED_PURPOSE = "UnpermittedPurpose"
    PROHIBITED_RESALE = "ProhibitedResale"
    THIRD_PARTY_EXTRACTION = "ThirdPartyExtraction"
    SELLER_DOUBLE_SALE = "SellerDoubleSale"


@dataclass(frozen=True)
class Lifespan:
    """Either ``Ticks(d)`` or ``Perpetual`` (ticks is None)."""

    ticks: Optional[int] = None

    def __post_init__(self):
        if self.ticks is not None and (isinstance(self.ticks, bool) or self.ticks < 0):
            raise InvalidLicense(f"lifespan must be a non-negative tick count, got {self.ticks}")

    @classmethod
    def of(cls, d: int) -> "Lifespan":
        return cls(int(d))

    @classmethod
    def perpetual(cls) -> "Lifespan":
        return cls(None)

    @property
    def is_perpetual(self) -> bool:
        return self.ticks is None

    def covers(self, other: "Lifespan") -> bool:
        """True when this lifespan is at least as long as ``other``."""
        if self.is_perpetual:
            return True
        return not other.is_perpetual and self.ticks >= other.ticks

    def to_record(self) -> Any:
        return "Perpetual" if self.is_perpetual else {"Ticks": self.ticks}

    @classmethod
    def from_record(cls, rec: Any) -> "Lifespan":
        if rec == "Perpetual":
            return cls.perpetual()
        if isinstance(rec, dict) and "Ticks" in rec:
            return cls.of(rec["Ticks"])
        raise InvalidLicense(f"unrecognised lifespan {rec!r}")


PERPETUAL = Lifespan.perpetual()


@dataclass(frozen=True)
class License:
    license_id: str
    exclusive: bool
    lifespan: Lifespan
    permitted_uses: frozenset[Purpose]
    resale_allowed: bool = False
    third_party_extraction_allowed: bool = False
    seller_id: str = ""
    buyer_id: Optional[str] = None
    category: str = ""
    granted_at: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "permitted_uses",
                           frozenset(Purpose(p) for p in self.permitted_uses))
        if not self.permitted_uses:
            raise InvalidLicense("permitted_uses must not be empty")
        if (Purpose.RESALE in self.permitted_uses) != self.resale_allowed:
            raise InvalidLicense("Resale purpose must match resale_allowed")
        if (Purpose.THIRD_PARTY_INFERENCE in self.permitted_uses) != \
                self.third_party_extraction_allowed:
            raise InvalidLicense(
                "ThirdPartyInference purpose must match third_party_extraction_allowed")

    @property
    def expires_at(self) -> Optional[int]:
        if self.granted_at is None or self.lifespan.is_perpetual:
            return None
        return self.granted_at + self.lifespan.ticks

    def grant(self, buyer_id: str, tick: int, license_id: Optional[str] = None) -> "License":
        return dataclasses.replace(self, buyer_id=buyer_id, granted_at=tick,
                                   license_id=license_id or self.license_id)

    def to_record(self) -> dict[str, Any]:
        return {
            "license_id": self.license_id,
            "exclusive": self.exclusive,
            "lifespan": self.lifespan.to_record(),
            "permitted_uses": sorted(p.value for p in self.permitted_uses),
            "resale_allowed": self.resale_allowed,
            "third_party_extraction_allowed": self.third_party_extraction_allowed,
            "seller_id": self.seller_id,
            "buyer_id": self.buyer_id,
            "category": self.category,
            "granted_at": self.granted_at,
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "License":
        try:
            return cls(
                license_id=rec["license_id"],
                exclusive=bool(rec["exclusive"]),
                lifespan=Lifespan.from_record(rec["lifespan"]),
                permitted_uses=frozenset(Purpose(p) for p in rec["permitted_uses"]),
                resale_allowed=bool(rec.get("resale_allowed", False)),
                third_party_extraction_allowed=bool(
                    rec.get("third_party_extraction_allowed", False)),
                seller_id=rec.get("seller_id", ""),
                buyer_id=rec.get("buyer_id"),
                category=rec.get("category", ""),
                granted_at=rec.get("granted_at"),
            )
        except (KeyError, ValueError) as exc:
            raise InvalidLicense(f"malformed licence record: {exc}") from exc


@dataclass(frozen=True)
class ComplianceVerdict:
    outcome: Outcome
    violation_kind: Optional[ViolationKind] = None

    def __post_init__(self):
        if (self.outcome is Outcome.VIOLATION) != (self.violation_kind is not None):
            raise ValueError("violation_kind present exactly when outcome is Violation")

    @property
    def compliant(self) -> bool:
        return self.outcome is Outcome.COMPLIANT

    def to_record(self) -> dict[str, Any]:
        return {"outcome": self.outcome.value,
                "violation_kind": self.violation_kind and self.violation_kind.value}


COMPLIANT = ComplianceVerdict(Outcome.COMPLIANT)


def violation(kind: ViolationKind) -> ComplianceVerdict:
    return ComplianceVerdict(Outcome.VIOLATION, kind)


def is_active(license: License, now: int) -> bool:
    if license.granted_at is None:
        raise NotYetGranted(f"licence {license.license_id} has not been granted")
    if license.lifespan.is_perpetual:
        return True
    return now < license.granted_at + license.lifespan.ticks


def check_action(license: License, actor: str, action: tuple[Purpose, int]) -> ComplianceVerdict:
    """Evaluate one use of licensed data.

    Precedence: Expired, ProhibitedResale, ThirdPartyExtraction,
    UnpermittedPurpose.
    """
    purpose, tick = Purpose(action[0]), action[1]
    if actor not in (license.buyer_id, license.seller_id):
        raise UnrelatedActor(f"{actor} is not a party to licence {license.license_id}")
    if license.granted_at is None:
        raise NotYetGranted(f"licence {license.license_id} has not been granted")
    if tick < license.granted_at:
        raise NotYetGranted(f"action at tick {tick} precedes grant at {license.granted_at}")
    if not is_active(license, tick):
        return violation(ViolationKind.EXPIRED)
    if purpose is Purpose.RESALE and not license.resale_allowed:
        return violation(ViolationKind.PROHIBITED_RESALE)
    if purpose is Purpose.THIRD_PARTY_INFERENCE and not license.third_party_extraction_allowed:
        return violation(ViolationKind.THIRD_PARTY_EXTRACTION)
    if purpose not in license.permitted_uses:
        return violation(ViolationKind.UNPERMITTED_PURPOSE)
    return COMPLIANT


def check_seller_double_sale(active_licenses: Iterable[License], seller_id: str,
                             category: str, now: Optional[int] = None) -> ComplianceVerdict:
    """Violation if the seller already sold exclusive access to this category.

    ``active_licenses`` is normally pre-filtered by the caller; when ``now`` is
    given, expired licences in the list are skipped here as well.
    """
    for lic in active_licenses:
        if lic.seller_id != seller_id or lic.category != category or not lic.exclusive:
            continue
        if lic.granted_at is None:
            continue
        if now is not None and not is_active(lic, now):
            continue
        return violation(ViolationKind.SELLER_DOUBLE_SALE)
    return COMPLIANT
