"""Policy-driven agents. Each step turns the market view into intents."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ..core import DataSet, Provenance
from ..flow import (
    BuySpec,
    ListingStatus,
    Market,
    SellSpec,
    SubsampleMode,
    TxnState,
)
from ..licensing import License, Lifespan, is_active
from ..risk import HarmImpactVector
from .config import Archetype, BuyerParams, CategoryDefaults, SellerParams

FIELD_NAMES = ("steps", "heart_rate")
FIELD_MEANS = np.array([100.0, 70.0])
FIELD_STDS = np.array([20.0, 8.0])


def agent_stream(seed: int, agent_id: str) -> np.random.Generator:
    """Independent stream per agent, keyed by id rather than position."""
    ss = np.random.SeedSequence(seed, spawn_key=(2, zlib.crc32(agent_id.encode())))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Agent:
    agent_id: str
    archetype: Archetype
    params: Union[SellerParams, BuyerParams]
    rng: np.random.Generator = field(repr=False)
    category_defaults: Optional[CategoryDefaults] = None
    # buyer state
    open_txn: Optional[str] = None
    idle_until: int = 0
    # seller state
    listing_id: Optional[str] = None

    @property
    def is_seller(self) -> bool:
        return self.archetype.is_seller


@dataclass(frozen=True)
class Intent:
    action: str
    txn_id: Optional[str] = None
    listing_id: Optional[str] = None
    spec: Union[BuySpec, SellSpec, None] = None
    junk: Optional[np.ndarray] = None


def honest_dataset(rng: np.random.Generator, n: int, tick: int, category: str,
                   provenance: Provenance) -> DataSet:
    values = FIELD_MEANS + rng.standard_normal((n, len(FIELD_NAMES))) * FIELD_STDS
    timestamps = tick * 10_000 + np.arange(n)
    return DataSet(timestamps, values, FIELD_NAMES, category, provenance)


def junk_values(rng: np.random.Generator, n: int, shift_std: float) -> np.ndarray:
    """Uniform values centred ``shift_std`` stds away from the honest mean."""
    half = np.sqrt(3.0) * FIELD_STDS
    centre = FIELD_MEANS + shift_std * FIELD_STDS
    return centre + rng.uniform(-1.0, 1.0, (n, len(FIELD_NAMES))) * half


def license_template(p: SellerParams) -> License:
    lifespan = Lifespan.perpetual() if p.lifespan_ticks is None else Lifespan.of(p.lifespan_ticks)
    return License("template", p.exclusive, lifespan, frozenset(p.permitted_uses),
                   p.resale_allowed, p.third_party_extraction_allowed)


def buy_spec(agent: Agent) -> BuySpec:
    p: BuyerParams = agent.params
    tolerance = 0.0 if agent.archetype is Archetype.ADVERSARY_BUYER else p.max_noise_tolerance
    min_life = (Lifespan.perpetual() if p.min_lifespan_ticks is None
                else Lifespan.of(p.min_lifespan_ticks))
    return BuySpec(agent.agent_id, p.category, p.max_price_per_point, tolerance,
                   p.min_seller_reputation, min_life, p.exclusive_required,
                   frozenset(p.purposes), p.subsample_policy)


def _seller_step(agent: Agent, market: Market) -> list[Intent]:
    p: SellerParams = agent.params
    intents: list[Intent] = []
    for txn in market.transactions.values():
        if txn.seller_id == agent.agent_id and txn.state is TxnState.ESCROW_FUNDED:
            refuse = p.refuse_delivery_prob > 0 and agent.rng.random() < p.refuse_delivery_prob
            intents.append(Intent("refuse_delivery" if refuse else "deliver", txn.txn_id))

    current = market.listings.get(agent.listing_id) if agent.listing_id else None
    if current is not None and current.status is ListingStatus.ACTIVE:
        stale = market.now - current.listed_at >= p.listing_ttl
        busy = any(t.listing_id == current.listing_id and not t.state.terminal
                   for t in market.transactions.values())
        if not stale or busy:
            return intents
        intents.append(Intent("withdraw", listing_id=current.listing_id))

    for lic in market.licenses:
        if (lic.seller_id == agent.agent_id and lic.category == p.category
                and lic.exclusive and is_active(lic, market.now)):
            return intents  # exclusivity sold; wait for expiry

    cat = agent.category_defaults
    data = honest_dataset(agent.rng, p.points, market.now, p.category, p.provenance)
    impacts = HarmImpactVector(cat.distortion, cat.revelation, cat.intrusion)
    spec = SellSpec(agent.agent_id, data, impacts, p.noise_level, license_template(p),
                    ask_multiplier=p.ask_multiplier, base_unit_value=cat.base_unit_value,
                    noise_seed=int(agent.rng.integers(0, 2**63)))
    junk = None
    if agent.archetype is Archetype.JUNK_SELLER:
        junk = junk_values(agent.rng, p.points, p.shift_std)
    intents.append(Intent("list", spec=spec, junk=junk))
    return intents


def _buyer_step(agent: Agent, market: Market) -> list[Intent]:
    p: BuyerParams = agent.params
    member = market.members[agent.agent_id]
    if agent.open_txn is not None:
        txn = market.transactions[agent.open_txn]
        if txn.state.terminal:
            agent.open_txn = None
            agent.idle_until = market.now + p.cooldown_ticks
            return []
        tid = txn.txn_id
        if txn.state is TxnState.MATCHED:
            lst = market.listings[txn.listing_id]
            ok = txn.price / lst.count <= p.max_price_per_point
            return [Intent("accept_price" if ok else "reject_price", tid)]
        if txn.state is TxnState.PRICE_ACCEPTED:
            if p.subsample_policy is SubsampleMode.WAIVE:
                return [Intent("waive", tid)]
            return [Intent("request_subsample", tid)]
        if txn.state is TxnState.SUBSAMPLE_ISSUED:
            if agent.archetype is Archetype.SUBSAMPLE_FARMER:
                reject = agent.rng.random() < p.reject_probability
                if reject:
                    return [Intent("reject_subsample", tid)]
            if market.check_subsample(tid).passed:
                return [Intent("accept_subsample", tid)]
            return [Intent("reject_subsample", tid)]
        if txn.state in (TxnState.SUBSAMPLE_ACCEPTED, TxnState.SUBSAMPLE_WAIVED):
            refuse = p.refuse_funding_prob > 0 and agent.rng.random() < p.refuse_funding_prob
            return [Intent("refuse_funding" if refuse else "fund", tid)]
        return []  # waiting on the seller

    if market.now < agent.idle_until:
        return []
    if p.subsample_policy is SubsampleMode.REQUIRE:
        if member.subsample_privilege.value == "Suspended":
            return []
        if market.subsample_quota_left(agent.agent_id, p.category) <= 0:
            return []
    return [Intent("search", spec=buy_spec(agent))]


def step_agent(agent: Agent, market: Market) -> list[Intent]:
    if market.members[agent.agent_id].expelled:
        return []
    if agent.is_seller:
        return _seller_step(agent, market)
    return _buyer_step(agent, market)
