"""Deterministic tick loop over a populated marketplace."""

from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Any, Union

import numpy as np

from ..core import EventLedger, Role
from ..flow import (
    ExclusivityConflict,
    ListingUnavailable,
    Market,
    Step,
    SubsampleQuotaExceeded,
    SubsamplingSuspendedError,
)
from .agents import Agent, Intent, agent_stream, step_agent
from .config import Archetype, ScenarioConfig
from .metrics import compute_metrics, metrics_json, trajectories_csv

log = logging.getLogger(__name__)

_STEPS = {
    "accept_price": Step.BUYER_ACCEPTS_PRICE,
    "reject_price": Step.BUYER_REJECTS_PRICE,
    "request_subsample": Step.REQUEST_SUBSAMPLE,
    "waive": Step.WAIVE_SUBSAMPLE,
    "accept_subsample": Step.ACCEPT_SUBSAMPLE,
    "reject_subsample": Step.REJECT_SUBSAMPLE,
    "fund": Step.FUND_ESCROW,
    "refuse_funding": Step.BUYER_REFUSES_FUNDING,
    "refuse_delivery": Step.SELLER_REFUSES_DELIVERY,
}


def build_agents(config: ScenarioConfig) -> list[Agent]:
    agents = []
    per_archetype: dict[Archetype, int] = {}
    for group in config.agents:
        params = config.agent_params(group)
        for _ in range(group.count):
            n = per_archetype.get(group.archetype, 0)
            per_archetype[group.archetype] = n + 1
            agent_id = f"{group.archetype.value}-{n:02d}"
            agents.append(Agent(agent_id, group.archetype, params,
                                agent_stream(config.seed, agent_id),
                                config.params.risk_categories[params.category]))
    return agents


def schedule(seed: int, tick: int, n: int) -> np.ndarray:
    ss = np.random.SeedSequence(seed, spawn_key=(1, tick))
    return np.random.Generator(np.random.PCG64(ss)).permutation(n)


def execute(market: Market, agent: Agent, intent: Intent) -> None:
    action = intent.action
    if action == "list":
        try:
            market.identify(agent.agent_id)
            listing = market.generate_product(intent.spec)
        except ExclusivityConflict:
            return
        if intent.junk is not None:
            # the published descriptor stays honest-looking; the goods do not
            listing = dataclasses.replace(
                listing, noised_data=listing.noised_data.with_values(intent.junk))
            market.listings[listing.listing_id] = listing
        agent.listing_id = listing.listing_id
    elif action == "withdraw":
        market.withdraw_listing(intent.listing_id)
    elif action == "search":
        market.identify(agent.agent_id)
        hits = market.search(intent.spec)
        if hits:
            agent.open_txn = market.match(agent.agent_id, hits[0].listing_id).txn_id
    elif action == "deliver":
        market.apply(intent.txn_id, Step.DELIVER_DATA)
        market.settle_exchange(intent.txn_id)
    else:
        try:
            market.apply(intent.txn_id, _STEPS[action])
        except (SubsamplingSuspendedError, SubsampleQuotaExceeded):
            market.apply(intent.txn_id, Step.CANCEL)


def run_scenario(config: ScenarioConfig) -> tuple[EventLedger, dict[str, Any]]:
    market = Market(config.pricing_params, config.reputation_params, config.subsample_policy)
    agents = sorted(build_agents(config), key=lambda a: a.agent_id)
    for agent in agents:
        roles = [Role.SELLER] if agent.is_seller else [Role.BUYER]
        market.register(agent.agent_id, roles, label=agent.archetype.value)

    for tick in range(config.ticks):
        market.now = tick
        for i in schedule(config.seed, tick, len(agents)):
            agent = agents[i]
            for intent in step_agent(agent, market):
                if market.members[agent.agent_id].expelled:
                    break
                try:
                    execute(market, agent, intent)
                except ListingUnavailable:
                    log.debug("tick %d: %s lost listing %s", tick, agent.agent_id,
                              intent.listing_id)

    # close out: refund anything still in flight so escrow ends empty
    for txn in list(market.transactions.values()):
        if not txn.state.terminal:
            market.apply(txn.txn_id, Step.CANCEL)
    return market.events, compute_metrics(market.events, config)


def write_outputs(out_dir: Union[str, Path], ledger: EventLedger,
                  metrics: dict[str, Any]) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "ledger": out / "ledger.jsonl",
        "metrics": out / "metrics.json",
        "trajectories": out / "trajectories.csv",
    }
    ledger.write_jsonl(paths["ledger"])
    paths["metrics"].write_text(metrics_json(metrics))
    paths["trajectories"].write_text(trajectories_csv(metrics))
    return paths
