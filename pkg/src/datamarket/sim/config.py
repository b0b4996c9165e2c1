"""Scenario configuration documents.

Validation errors are re-raised as ``ConfigError`` carrying the dotted path
of the offending field, e.g. ``agents[2].archetype``.
"""

from __future__ import annotations

import json
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..core import MarketError, Provenance
from ..flow import SubsampleMode, SubsamplePolicy
from ..licensing import Purpose
from ..pricing import PricingParams
from ..reputation import ReputationParams


class ConfigError(MarketError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
        self.message = message


class Archetype(str, Enum):
    HONEST_SELLER = "HonestSeller"
    JUNK_SELLER = "JunkSeller"
    HONEST_BUYER = "HonestBuyer"
    ADVERSARY_BUYER = "AdversaryBuyer"
    SUBSAMPLE_FARMER = "SubsampleFarmer"

    @property
    def is_seller(self) -> bool:
        return self in (Archetype.HONEST_SELLER, Archetype.JUNK_SELLER)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class SellerParams(_Strict):
    category: str = "activity/walking"
    points: int = Field(200, ge=1)
    noise_level: float = Field(0.0, ge=0.0, le=1.0)
    ask_multiplier: float = Field(1.0, gt=0.0)
    exclusive: bool = False
    lifespan_ticks: Optional[int] = Field(90, ge=0)
    permitted_uses: list[Purpose] = [Purpose.PRODUCT_OPTIMIZATION, Purpose.RESEARCH_AGGREGATE]
    resale_allowed: bool = False
    third_party_extraction_allowed: bool = False
    provenance: Provenance = Provenance.BYPRODUCT_OF_ACTIVITY
    listing_ttl: int = Field(50, ge=1)
    refuse_delivery_prob: float = Field(0.0, ge=0.0, le=1.0)
    # junk sellers only: how far the delivered points sit from the published mean
    shift_std: float = Field(6.0, ge=5.0)

    @model_validator(mode="after")
    def _purposes_match_flags(self):
        if not self.permitted_uses:
            raise ValueError("permitted_uses must not be empty")
        if (Purpose.RESALE in self.permitted_uses) != self.resale_allowed:
            raise ValueError("Resale in permitted_uses must match resale_allowed")
        if (Purpose.THIRD_PARTY_INFERENCE in self.permitted_uses) != \
                self.third_party_extraction_allowed:
            raise ValueError("ThirdPartyInference in permitted_uses must match "
                             "third_party_extraction_allowed")
        return self


class BuyerParams(_Strict):
    category: str = "activity/walking"
    max_price_per_point: float = Field(10.0, gt=0.0)
    max_noise_tolerance: float = Field(0.5, ge=0.0, le=1.0)
    min_seller_reputation: float = Field(0.0, ge=0.0, le=1.0)
    min_lifespan_ticks: Optional[int] = Field(0, ge=0)
    exclusive_required: bool = False
    purposes: list[Purpose] = [Purpose.PRODUCT_OPTIMIZATION]
    subsample_policy: SubsampleMode = SubsampleMode.REQUIRE
    cooldown_ticks: int = Field(3, ge=0)
    refuse_funding_prob: float = Field(0.0, ge=0.0, le=1.0)
    # subsample farmers only
    reject_probability: float = Field(1.0, ge=0.0, le=1.0)


class AgentGroup(_Strict):
    archetype: Archetype
    count: int = Field(ge=0)
    parameters: dict[str, Any] = {}


class CategoryDefaults(_Strict):
    distortion: int = Field(2, ge=0, le=5)
    revelation: int = Field(2, ge=0, le=5)
    intrusion: int = Field(2, ge=0, le=5)
    base_unit_value: float = Field(1.0, gt=0.0)


class PricingModel(_Strict):
    alpha: float = Field(1.0, ge=0.0)
    beta: float = Field(0.8, ge=0.0, le=1.0)
    gamma: float = Field(2.0, ge=0.0)
    rep_threshold: float = Field(0.5, ge=0.0, le=1.0)
    exclusivity_mult: float = Field(1.5, ge=1.0)
    resale_mult: float = Field(1.25, ge=1.0)
    lifespan_half_gain: float = Field(0.5, ge=0.0)
    lifespan_cap_years: float = Field(2.0, ge=0.0)
    demand_bounds: tuple[float, float] = (0.5, 2.0)

    @model_validator(mode="after")
    def _bounds(self):
        lo, hi = self.demand_bounds
        if not 0 < lo <= hi:
            raise ValueError("demand_bounds must satisfy 0 < low <= high")
        return self


class ReputationModel(_Strict):
    base: float = Field(0.5, gt=0.0, lt=1.0)
    smoothing: int = Field(5, ge=1)
    expulsion_threshold: float = Field(0.2, gt=0.0)
    unjustified_reject_limit: int = Field(5, ge=1)

    @model_validator(mode="after")
    def _threshold_below_base(self):
        if self.expulsion_threshold >= self.base:
            raise ValueError("expulsion_threshold must be below base")
        return self


class SubsampleModel(_Strict):
    fraction: float = Field(0.05, gt=0.0, le=1.0)
    min_points: int = Field(10, ge=1)
    cap: int = Field(3, ge=0)
    window_ticks: int = Field(50, ge=1)


DEFAULT_CATEGORIES = {"activity/walking": CategoryDefaults(distortion=4, revelation=5,
                                                           intrusion=2)}


class ScenarioParams(_Strict):
    pricing: PricingModel = PricingModel()
    reputation: ReputationModel = ReputationModel()
    subsample: SubsampleModel = SubsampleModel()
    risk_categories: dict[str, CategoryDefaults] = DEFAULT_CATEGORIES


class ScenarioConfig(_Strict):
    seed: int = Field(ge=0, lt=2**64)
    ticks: int = Field(ge=1)
    agents: list[AgentGroup]
    params: ScenarioParams = ScenarioParams()

    @property
    def pricing_params(self) -> PricingParams:
        return PricingParams(**self.params.pricing.model_dump())

    @property
    def reputation_params(self) -> ReputationParams:
        return ReputationParams(**self.params.reputation.model_dump())

    @property
    def subsample_policy(self) -> SubsamplePolicy:
        return SubsamplePolicy(**self.params.subsample.model_dump())

    def agent_params(self, group: AgentGroup) -> Union[SellerParams, BuyerParams]:
        model = SellerParams if group.archetype.is_seller else BuyerParams
        return model(**group.parameters)


def _format_loc(loc: tuple) -> str:
    out = ""
    for part in loc:
        if isinstance(part, int):
            out += f"[{part}]"
        else:
            out += f".{part}" if out else str(part)
    return out


def _first_error(exc: ValidationError, prefix: tuple = ()) -> ConfigError:
    err = exc.errors()[0]
    loc = tuple(p for p in err["loc"] if p not in ("function-after",))
    # model-level validators report an empty loc; keep the enclosing path
    return ConfigError(_format_loc(prefix + loc), err["msg"])


def parse_config(document: Union[str, bytes, dict]) -> ScenarioConfig:
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"malformed JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise ConfigError("", "configuration must be a JSON object")
    try:
        cfg = ScenarioConfig.model_validate(document)
    except ValidationError as exc:
        raise _first_error(exc) from None

    for i, group in enumerate(cfg.agents):
        try:
            cfg.agent_params(group)
        except ValidationError as exc:
            raise _first_error(exc, ("agents", i, "parameters")) from None
        if not group.archetype.is_seller:
            cat = group.parameters.get("category", BuyerParams().category)
        else:
            cat = group.parameters.get("category", SellerParams().category)
        if cat not in cfg.params.risk_categories:
            raise ConfigError(f"agents[{i}].parameters.category",
                              f"no risk defaults for category {cat!r}")

    archetypes = {g.archetype for g in cfg.agents}
    if not any(a.is_seller for a in archetypes):
        raise ConfigError("agents", "at least one seller archetype is required")
    if all(a.is_seller for a in archetypes):
        raise ConfigError("agents", "at least one buyer archetype is required")
    return cfg


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    return parse_config(Path(path).read_text())
