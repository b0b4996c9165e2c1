"""Pricing from risk, licensing and demand, with noise and reputation modifiers.

The recommended price is a product of independently auditable factors::

    U * Q * (1 + alpha*R) * (1 - beta*n) * X * S * T_L * D
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .core import MarketError
from .licensing import License, Lifespan
from .risk import RiskAssessment

DAYS_PER_YEAR = 365.0


class InvalidPricingInput(MarketError):
    pass


class InvalidAsk(MarketError):
    pass


@dataclass(frozen=True)
class PricingParams:
    alpha: float = 1.0
    beta: float = 0.8
    gamma: float = 2.0
    rep_threshold: float = 0.5
    exclusivity_mult: float = 1.5
    resale_mult: float = 1.25
    lifespan_half_gain: float = 0.5
    lifespan_cap_years: float = 2.0
    demand_bounds: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        if self.alpha < 0 or self.gamma < 0:
            raise ValueError("alpha and gamma must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.exclusivity_mult < 1.0 or self.resale_mult < 1.0:
            raise ValueError("licence multipliers must be >= 1")
        if self.lifespan_half_gain < 0 or self.lifespan_cap_years < 0:
            raise ValueError("lifespan parameters must be non-negative")
        lo, hi = self.demand_bounds
        if not 0 < lo <= hi:
            raise ValueError("demand_bounds must satisfy 0 < low <= high")


DEFAULT_PARAMS = PricingParams()


@dataclass(frozen=True)
class PriceQuote:
    recommended: float
    factors: dict[str, float]

    @property
    def ask_basis(self) -> float:
        """The price before the noise discount: what a seller asks so that
        the enforced listing price lands on ``recommended``."""
        noise = self.factors["noise"]
        if noise == 0:
            return math.inf
        return self.recommended / noise

    def to_record(self) -> dict[str, Any]:
        return {"recommended": self.recommended, "factors": dict(self.factors)}


def demand_index(open_buy_specs_in_category: int, active_listings_in_category: int,
                 params: PricingParams = DEFAULT_PARAMS) -> float:
    if open_buy_specs_in_category < 0 or active_listings_in_category < 0:
        raise InvalidPricingInput("counts must be non-negative")
    lo, hi = params.demand_bounds
    raw = (1 + open_buy_specs_in_category) / (1 + active_listings_in_category)
    return min(hi, max(lo, raw))


def lifespan_factor(lifespan: Lifespan, params: PricingParams = DEFAULT_PARAMS) -> float:
    if lifespan.is_perpetual:
        years = params.lifespan_cap_years
    else:
        years = min(lifespan.ticks / DAYS_PER_YEAR, params.lifespan_cap_years)
    return 1.0 + params.lifespan_half_gain * years


def recommend_price(base_unit_value: float, quantity: int, risk: RiskAssessment,
                    noise_level: float, license: License, demand: float,
                    params: PricingParams = DEFAULT_PARAMS) -> PriceQuote:
    if not base_unit_value > 0:
        raise InvalidPricingInput(f"base_unit_value must be positive, got {base_unit_value}")
    if isinstance(quantity, bool) or int(quantity) != quantity or quantity < 1:
        raise InvalidPricingInput(f"quantity must be an integer >= 1, got {quantity}")
    if not 0.0 <= noise_level <= 1.0:
        raise InvalidPricingInput(f"noise_level {noise_level} outside [0, 1]")
    lo, hi = params.demand_bounds
    if not lo <= demand <= hi:
        raise InvalidPricingInput(f"demand {demand} outside bounds {params.demand_bounds}")

    factors = {
        "base_unit_value": float(base_unit_value),
        "quantity": float(quantity),
        "risk": 1.0 + params.alpha * risk.normalized,
        "noise": 1.0 - params.beta * noise_level,
        "exclusivity": params.exclusivity_mult if license.exclusive else 1.0,
        "resale": params.resale_mult if license.resale_allowed else 1.0,
        "lifespan": lifespan_factor(license.lifespan, params),
        "demand": float(demand),
    }
    return PriceQuote(math.prod(factors.values()), factors)


def enforced_listing_price(seller_ask: float, noise_level: float,
                           params: PricingParams = DEFAULT_PARAMS) -> float:
    """The noise discount is mandatory; the ask itself is the seller's call."""
    if not seller_ask > 0:
        raise InvalidAsk(f"ask must be positive, got {seller_ask}")
    if not 0.0 <= noise_level <= 1.0:
        raise InvalidPricingInput(f"noise_level {noise_level} outside [0, 1]")
    return seller_ask * (1.0 - params.beta * noise_level)


def buyer_effective_price(listing_price: float, buyer_reputation: float,
                          params: PricingParams = DEFAULT_PARAMS) -> float:
    if not 0.0 <= buyer_reputation <= 1.0:
        raise InvalidPricingInput(f"buyer_reputation {buyer_reputation} outside [0, 1]")
    premium = params.gamma * max(0.0, params.rep_threshold - buyer_reputation)
    return listing_price * (1.0 + premium)
