"""Reputation graph: members are nodes, transaction outcomes are weighted edges.

Score of a member m whose outgoing edges, in insertion order, are e_1..e_n:

    clamp(base + sum(sign_i * partner_rep_i / (i + K) for i in 1..n), 0, 1)

Each edge's contribution is fixed when it is inserted. A single edge gives
base +/- w / (1 + K). Dividing the whole sum by (n + K) instead would let a
success with a weak partner dilute an already-high score, so success could
lower reputation; the per-position divisor keeps every success non-negative
and every violation non-positive.

Edge weights are frozen at creation, so replaying the edge list reproduces
every score without iterating over the whole graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from .core import EventKind, MarketError

ORCHESTRATOR = "__orchestrator__"


class UnknownMember(MarketError):
    pass


class SelfTransaction(MarketError):
    pass


@dataclass(frozen=True)
class ReputationParams:
    base: float = 0.5
    smoothing: int = 5
    expulsion_threshold: float = 0.2
    unjustified_reject_limit: int = 5

    def __post_init__(self):
        if not 0.0 < self.base < 1.0:
            raise ValueError("base must lie in (0, 1)")
        if not 0.0 < self.expulsion_threshold < self.base:
            raise ValueError("expulsion_threshold must lie in (0, base)")
        if self.smoothing < 1:
            raise ValueError("smoothing must be a positive integer")
        if self.unjustified_reject_limit < 1:
            raise ValueError("unjustified_reject_limit must be positive")


@dataclass(frozen=True)
class OutcomeEdge:
    src: str
    dst: str
    sign: int
    partner_rep_at_time: float
    tick: int


# (kind, payload) pairs for the caller to append to its event ledger
Notice = tuple[EventKind, dict[str, Any]]


@dataclass
class ReputationLedger:
    nodes: set[str] = field(default_factory=set)
    edges: list[OutcomeEdge] = field(default_factory=list)
    unjustified_rejects: dict[str, int] = field(default_factory=dict)
    suspended: set[str] = field(default_factory=set)
    expelled: set[str] = field(default_factory=set)
    # (sign * weight) per source node, in insertion order
    _signed: dict[str, list[float]] = field(default_factory=dict, repr=False)
    # (member, K) -> (edges folded in, running total)
    _cache: dict[tuple[str, int], tuple[int, float]] = field(default_factory=dict, repr=False)

    def add_member(self, member_id: str) -> None:
        self.nodes.add(member_id)

    def add_edge(self, edge: OutcomeEdge) -> None:
        for end in (edge.src, edge.dst):
            if end not in self.nodes and end != ORCHESTRATOR:
                raise UnknownMember(end)
        if edge.sign not in (1, -1):
            raise ValueError(f"edge sign must be +1 or -1, got {edge.sign}")
        if edge.dst == ORCHESTRATOR:
            self.nodes.add(ORCHESTRATOR)
        self.edges.append(edge)
        self._signed.setdefault(edge.src, []).append(edge.sign * edge.partner_rep_at_time)

    def edges_of(self, member: str) -> list[OutcomeEdge]:
        return [e for e in self.edges if e.src == member]


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def reputation_of(ledger: ReputationLedger, member: str,
                  params: ReputationParams = ReputationParams()) -> float:
    if member not in ledger.nodes or member == ORCHESTRATOR:
        raise UnknownMember(member)
    signed = ledger._signed.get(member, ())
    key = (member, params.smoothing)
    done, total = ledger._cache.get(key, (0, 0.0))
    for i in range(done, len(signed)):
        total += signed[i] / (i + 1 + params.smoothing)
    ledger._cache[key] = (len(signed), total)
    return _clamp(params.base + total)


def reputation_from_edges(edges: Iterable[OutcomeEdge], member: str,
                          params: ReputationParams = ReputationParams()) -> float:
    """Recompute a score straight from an edge list (replay path)."""
    total, count = 0.0, 0
    for e in edges:
        if e.src == member:
            count += 1
            total += e.sign * e.partner_rep_at_time / (count + params.smoothing)
    return _clamp(params.base + total)


def _updated(member: str, old: float, new: float, edge: OutcomeEdge) -> Notice:
    return (EventKind.REPUTATION_UPDATED, {
        "member": member, "old": old, "new": new,
        "counterparty": edge.dst, "sign": edge.sign,
        "weight": edge.partner_rep_at_time,
    })


def _maybe_expel(ledger: ReputationLedger, member: str, score: float,
                 params: ReputationParams) -> list[Notice]:
    if score < params.expulsion_threshold and member not in ledger.expelled:
        ledger.expelled.add(member)
        return [(EventKind.MEMBER_EXPELLED, {"member": member, "reputation": score})]
    return []


def record_outcome(ledger: ReputationLedger, a: str, b: str, sign: int, tick: int,
                   params: ReputationParams = ReputationParams()) -> list[Notice]:
    """Symmetric edges a->b and b->a, each weighted by the partner's prior score."""
    if a == b:
        raise SelfTransaction(f"{a} cannot transact with itself")
    rep_a = reputation_of(ledger, a, params)
    rep_b = reputation_of(ledger, b, params)
    notices: list[Notice] = []
    for src, dst, partner_rep, old in ((a, b, rep_b, rep_a), (b, a, rep_a, rep_b)):
        edge = OutcomeEdge(src, dst, sign, partner_rep, tick)
        ledger.add_edge(edge)
        new = reputation_of(ledger, src, params)
        notices.append(_updated(src, old, new, edge))
    for member in (a, b):
        notices += _maybe_expel(ledger, member, reputation_of(ledger, member, params), params)
    return notices


def record_violation(ledger: ReputationLedger, transgressor: str, counterparty: str,
                     tick: int, params: ReputationParams = ReputationParams()) -> list[Notice]:
    """One-sided violation edge; only the transgressor's score moves."""
    if transgressor == counterparty:
        raise SelfTransaction(f"{transgressor} cannot transact with itself")
    old = reputation_of(ledger, transgressor, params)
    if counterparty == ORCHESTRATOR:
        weight = params.base
    else:
        weight = reputation_of(ledger, counterparty, params)
    edge = OutcomeEdge(transgressor, counterparty, -1, weight, tick)
    ledger.add_edge(edge)
    new = reputation_of(ledger, transgressor, params)
    return [_updated(transgressor, old, new, edge)] + _maybe_expel(ledger, transgressor,
                                                                    new, params)


def note_subsample_reject(ledger: ReputationLedger, buyer: str, justified: bool, tick: int,
                          params: ReputationParams = ReputationParams()) -> list[Notice]:
    """Police subsample farming. Justified rejects are free."""
    if buyer not in ledger.nodes or buyer == ORCHESTRATOR:
        raise UnknownMember(buyer)
    if justified:
        return []
    count = ledger.unjustified_rejects.get(buyer, 0) + 1
    ledger.unjustified_rejects[buyer] = count
    notices = record_violation(ledger, buyer, ORCHESTRATOR, tick, params)
    if count >= params.unjustified_reject_limit and buyer not in ledger.suspended:
        ledger.suspended.add(buyer)
        notices.append((EventKind.SUBSAMPLING_SUSPENDED,
                        {"member": buyer, "unjustified_rejects": count}))
    return notices


def is_suspended(ledger: ReputationLedger, buyer: str) -> bool:
    return buyer in ledger.suspended
