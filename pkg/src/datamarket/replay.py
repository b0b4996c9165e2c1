"""Rebuild marketplace state from an exported event ledger."""

from __future__ import annotations

from typing import Any, Iterable

from .core import EventKind, MarketEvent
from .flow import AbortReason, Step, Transaction, TxnEvent, _txn_view, advance
from .reputation import OutcomeEdge, ReputationParams, reputation_from_edges

_STEP_OF = {
    EventKind.PRICE_ACCEPTED: Step.BUYER_ACCEPTS_PRICE,
    EventKind.PRICE_REJECTED: Step.BUYER_REJECTS_PRICE,
    EventKind.SUBSAMPLE_REQUESTED: Step.REQUEST_SUBSAMPLE,
    EventKind.SUBSAMPLE_ACCEPTED: Step.ACCEPT_SUBSAMPLE,
    EventKind.SUBSAMPLE_REJECTED: Step.REJECT_SUBSAMPLE,
    EventKind.SUBSAMPLE_WAIVED: Step.WAIVE_SUBSAMPLE,
    EventKind.DATA_DELIVERED: Step.DELIVER_DATA,
    EventKind.SETTLED: Step.RELEASE_ESCROW,
}

# aborts with no dedicated event kind of their own
_ABORT_STEP = {
    AbortReason.FUNDING_REFUSED.value: Step.BUYER_REFUSES_FUNDING,
    AbortReason.DELIVERY_REFUSED.value: Step.SELLER_REFUSES_DELIVERY,
    AbortReason.CANCELLED.value: Step.CANCEL,
}


def replay_edges(events: Iterable[MarketEvent]) -> list[OutcomeEdge]:
    return [
        OutcomeEdge(e.payload["member"], e.payload["counterparty"], e.payload["sign"],
                    e.payload["weight"], e.tick)
        for e in events if e.kind is EventKind.REPUTATION_UPDATED
    ]


def replay(events: Iterable[MarketEvent],
           rep_params: ReputationParams = ReputationParams()) -> dict[str, Any]:
    """Return the same structure as ``Market.snapshot()``."""
    events = list(events)
    members: dict[str, dict[str, Any]] = {}
    listings: dict[str, str] = {}
    txns: dict[str, Transaction] = {}
    licenses: list[dict[str, Any]] = []

    for ev in events:
        p = ev.payload
        kind = ev.kind
        if kind is EventKind.IDENTIFIED:
            members.setdefault(p["member"], {"expelled": False,
                                             "subsample_privilege": "Active"})
        elif kind is EventKind.MEMBER_EXPELLED:
            members[p["member"]]["expelled"] = True
        elif kind is EventKind.SUBSAMPLING_SUSPENDED:
            members[p["member"]]["subsample_privilege"] = "Suspended"
        elif kind is EventKind.LISTED:
            listings[p["listing_id"]] = "Active"
        elif kind is EventKind.LISTING_WITHDRAWN:
            listings[p["listing_id"]] = "Withdrawn"
        elif kind is EventKind.MATCHED:
            txns[p["txn_id"]] = Transaction(p["txn_id"], p["buyer"], p["listing_id"],
                                            p["seller"], p["price"])
        elif kind is EventKind.ESCROW_FUNDED:
            txns[p["txn_id"]] = advance(txns[p["txn_id"]],
                                        TxnEvent(Step.FUND_ESCROW, p["amount"]))
        elif kind in _STEP_OF:
            txns[p["txn_id"]] = advance(txns[p["txn_id"]], _STEP_OF[kind])
            if kind is EventKind.SETTLED:
                listings[p["listing_id"]] = p["listing_status"]
                licenses.append(p["license"])
        elif kind is EventKind.ABORTED and p["reason"] in _ABORT_STEP:
            txns[p["txn_id"]] = advance(txns[p["txn_id"]], _ABORT_STEP[p["reason"]])

    edges = replay_edges(events)
    for mid, view in members.items():
        view["reputation"] = reputation_from_edges(edges, mid, rep_params)
    return {
        "members": dict(sorted(members.items())),
        "listings": dict(sorted(listings.items())),
        "transactions": {tid: _txn_view(t) for tid, t in sorted(txns.items())},
        "licenses": sorted(licenses, key=lambda r: r["license_id"]),
    }
