"""The transaction process as an event-sourced state machine.

``advance`` is the pure transition function. ``Market`` owns one marketplace
instance: it applies transitions, runs the orchestrator monitors
(reputation, noise discount, subsample policing, escrow) and appends every
step to the event ledger.
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Optional

import numpy as np

from . import reputation as rep
from .core import (
    DataDescriptor,
    DataSet,
    EventKind,
    EventLedger,
    FieldStats,
    MarketError,
    Member,
    Role,
    SubsamplePrivilege,
    describe_dataset,
    field_stats,
)
from .licensing import (
    License,
    Lifespan,
    Purpose,
    check_seller_double_sale,
    is_active,
)
from .pricing import (
    PriceQuote,
    PricingParams,
    buyer_effective_price,
    demand_index,
    enforced_listing_price,
    recommend_price,
)
from .privacy import NoiseSpec, check_level, inject_noise, noise_generator
from .risk import HarmImpactVector, RiskAssessment, assess_risk


class IllegalTransition(MarketError):
    pass


class AccessDenied(MarketError):
    pass


class ExclusivityConflict(MarketError):
    pass


class UnlistableProvenance(MarketError):
    pass


class SubsamplingSuspendedError(MarketError):
    pass


class SubsampleQuotaExceeded(MarketError):
    pass


class ListingUnavailable(MarketError):
    pass


class TxnState(str, Enum):
    MATCHED = "Matched"
    PRICE_ACCEPTED = "PriceAccepted"
    SUBSAMPLE_ISSUED = "SubsampleIssued"
    SUBSAMPLE_ACCEPTED = "SubsampleAccepted"
    SUBSAMPLE_WAIVED = "SubsampleWaived"
    ESCROW_FUNDED = "EscrowFunded"
    DATA_DELIVERED = "DataDelivered"
    SETTLED = "Settled"
    ABORTED = "Aborted"

    @property
    def terminal(self) -> bool:
        return self in (TxnState.SETTLED, TxnState.ABORTED)


class AbortReason(str, Enum):
    PRICE_REJECTED = "PriceRejected"
    SUBSAMPLE_REJECTED = "SubsampleRejected"
    DELIVERY_REFUSED = "DeliveryRefused"
    FUNDING_REFUSED = "FundingRefused"
    CANCELLED = "Cancelled"


class Step(str, Enum):
    BUYER_ACCEPTS_PRICE = "BuyerAcceptsPrice"
    BUYER_REJECTS_PRICE = "BuyerRejectsPrice"
    REQUEST_SUBSAMPLE = "RequestSubsample"
    WAIVE_SUBSAMPLE = "WaiveSubsample"
    ACCEPT_SUBSAMPLE = "AcceptSubsample"
    REJECT_SUBSAMPLE = "RejectSubsample"
    FUND_ESCROW = "FundEscrow"
    BUYER_REFUSES_FUNDING = "BuyerRefusesFunding"
    DELIVER_DATA = "DeliverData"
    SELLER_REFUSES_DELIVERY = "SellerRefusesDelivery"
    RELEASE_ESCROW = "ReleaseEscrow"
    CANCEL = "Cancel"


S, E = TxnState, Step

# (state, step) -> (next state, abort reason)
TRANSITIONS: dict[tuple[TxnState, Step], tuple[TxnState, Optional[AbortReason]]] = {
    (S.MATCHED, E.BUYER_ACCEPTS_PRICE): (S.PRICE_ACCEPTED, None),
    (S.MATCHED, E.BUYER_REJECTS_PRICE): (S.ABORTED, AbortReason.PRICE_REJECTED),
    (S.PRICE_ACCEPTED, E.REQUEST_SUBSAMPLE): (S.SUBSAMPLE_ISSUED, None),
    (S.PRICE_ACCEPTED, E.WAIVE_SUBSAMPLE): (S.SUBSAMPLE_WAIVED, None),
    (S.SUBSAMPLE_ISSUED, E.ACCEPT_SUBSAMPLE): (S.SUBSAMPLE_ACCEPTED, None),
    (S.SUBSAMPLE_ISSUED, E.REJECT_SUBSAMPLE): (S.ABORTED, AbortReason.SUBSAMPLE_REJECTED),
    (S.SUBSAMPLE_ACCEPTED, E.FUND_ESCROW): (S.ESCROW_FUNDED, None),
    (S.SUBSAMPLE_WAIVED, E.FUND_ESCROW): (S.ESCROW_FUNDED, None),
    (S.SUBSAMPLE_ACCEPTED, E.BUYER_REFUSES_FUNDING): (S.ABORTED, AbortReason.FUNDING_REFUSED),
    (S.SUBSAMPLE_WAIVED, E.BUYER_REFUSES_FUNDING): (S.ABORTED, AbortReason.FUNDING_REFUSED),
    (S.ESCROW_FUNDED, E.DELIVER_DATA): (S.DATA_DELIVERED, None),
    (S.ESCROW_FUNDED, E.SELLER_REFUSES_DELIVERY): (S.ABORTED, AbortReason.DELIVERY_REFUSED),
    (S.DATA_DELIVERED, E.RELEASE_ESCROW): (S.SETTLED, None),
}
for _s in (S.MATCHED, S.PRICE_ACCEPTED, S.SUBSAMPLE_ISSUED, S.SUBSAMPLE_ACCEPTED,
           S.SUBSAMPLE_WAIVED, S.ESCROW_FUNDED):
    TRANSITIONS[(_s, E.CANCEL)] = (S.ABORTED, AbortReason.CANCELLED)
del _s

CONSENT_STEPS = frozenset({E.BUYER_ACCEPTS_PRICE, E.ACCEPT_SUBSAMPLE, E.WAIVE_SUBSAMPLE})


def transition_records() -> list[dict[str, Any]]:
    """The transition table as a machine-readable adjacency list."""
    return [
        {"from": src.value, "event": step.value, "to": dst.value,
         "reason": reason.value if reason else None,
         "consent": step in CONSENT_STEPS}
        for (src, step), (dst, reason) in TRANSITIONS.items()
    ]


@dataclass(frozen=True)
class TxnEvent:
    step: Step
    amount: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "step", Step(self.step))


@dataclass(frozen=True)
class Transaction:
    txn_id: str
    buyer_id: str
    listing_id: str
    seller_id: str = ""
    price: float = 0.0
    state: TxnState = TxnState.MATCHED
    abort_reason: Optional[AbortReason] = None
    consent_count: int = 0
    escrow_balance: float = 0.0
    released: float = 0.0
    refunded: float = 0.0
    history: tuple[TxnState, ...] = (TxnState.MATCHED,)


def advance(txn: Transaction, event: TxnEvent | Step) -> Transaction:
    if not isinstance(event, TxnEvent):
        event = TxnEvent(event)
    key = (txn.state, event.step)
    if key not in TRANSITIONS:
        raise IllegalTransition(f"{event.step.value} is not legal in state {txn.state.value}")
    nxt, reason = TRANSITIONS[key]
    changes: dict[str, Any] = {"state": nxt, "abort_reason": reason,
                               "history": txn.history + (nxt,)}
    if event.step in CONSENT_STEPS:
        changes["consent_count"] = txn.consent_count + 1
    if event.step is Step.FUND_ESCROW:
        if not event.amount > 0:
            raise IllegalTransition("escrow must be funded with a positive amount")
        changes["escrow_balance"] = float(event.amount)
    elif event.step is Step.RELEASE_ESCROW:
        changes["released"] = txn.escrow_balance
        changes["escrow_balance"] = 0.0
    elif nxt is TxnState.ABORTED and txn.escrow_balance > 0:
        changes["refunded"] = txn.escrow_balance
        changes["escrow_balance"] = 0.0
    return dataclasses.replace(txn, **changes)


# --- specs, listings, subsamples ---------------------------------------------


class SubsampleMode(str, Enum):
    REQUIRE = "Require"
    WAIVE = "Waive"


@dataclass(frozen=True)
class BuySpec:
    buyer_id: str
    category: str
    max_price_per_point: float
    max_noise_tolerance: float = 1.0
    min_seller_reputation: float = 0.0
    min_lifespan: Lifespan = Lifespan(0)
    exclusive_required: bool = False
    purposes: frozenset[Purpose] = frozenset({Purpose.PRODUCT_OPTIMIZATION})
    subsample_policy: SubsampleMode = SubsampleMode.REQUIRE

    def __post_init__(self):
        check_level(self.max_noise_tolerance)
        object.__setattr__(self, "purposes", frozenset(Purpose(p) for p in self.purposes))

    def to_record(self) -> dict[str, Any]:
        return {
            "buyer_id": self.buyer_id,
            "category": self.category,
            "max_price_per_point": self.max_price_per_point,
            "max_noise_tolerance": self.max_noise_tolerance,
            "min_seller_reputation": self.min_seller_reputation,
            "min_lifespan": self.min_lifespan.to_record(),
            "exclusive_required": self.exclusive_required,
            "purposes": sorted(p.value for p in self.purposes),
            "subsample_policy": self.subsample_policy.value,
        }


@dataclass(frozen=True)
class SellSpec:
    seller_id: str
    dataset: DataSet
    impacts: HarmImpactVector
    noise_level: float
    license_terms: License
    # None: ask at ask_multiplier x the recommended price
    ask_per_point: Optional[float] = None
    ask_multiplier: float = 1.0
    base_unit_value: float = 1.0
    noise_seed: Optional[int] = None

    def __post_init__(self):
        check_level(self.noise_level)


class ListingStatus(str, Enum):
    ACTIVE = "Active"
    WITHDRAWN = "Withdrawn"
    SOLD = "Sold"


@dataclass(frozen=True)
class Listing:
    listing_id: str
    seller_id: str
    descriptor: DataDescriptor
    risk: RiskAssessment
    noised_data: DataSet = field(repr=False)
    license_template: License
    listing_price: float
    quote: PriceQuote
    listed_at: int
    status: ListingStatus = ListingStatus.ACTIVE

    @property
    def category(self) -> str:
        return self.descriptor.category

    @property
    def noise_level(self) -> float:
        return self.descriptor.declared_noise_level

    @property
    def count(self) -> int:
        return self.descriptor.count


@dataclass(frozen=True)
class SubsamplePolicy:
    fraction: float = 0.05
    min_points: int = 10
    cap: int = 3
    window_ticks: int = 50


@dataclass(frozen=True)
class Subsample:
    listing_id: str
    points: DataSet = field(repr=False)
    stats: tuple[FieldStats, ...]

    @property
    def size(self) -> int:
        return self.points.count


@dataclass(frozen=True)
class Validation:
    passed: bool
    reason: str = ""


def subsample_size(count: int, fraction: float = 0.05, min_points: int = 10) -> int:
    return min(count, max(math.ceil(fraction * count), min_points))


def draw_subsample(listing: Listing, fraction: float, seed: int,
                   min_points: int = 10) -> Subsample:
    data = listing.noised_data
    m = subsample_size(data.count, fraction, min_points)
    rng = noise_generator(seed)
    idx = np.sort(rng.choice(data.count, size=m, replace=False))
    pts = DataSet(data.timestamps[idx], data.values[idx], data.field_names,
                  data.category, data.provenance)
    return Subsample(listing.listing_id, pts, field_stats(pts.values))


def validate_subsample(subsample: Subsample, descriptor: DataDescriptor,
                       noise_level: float) -> Validation:
    """3-sigma check of the sample against the published descriptor."""
    m = subsample.size
    for name, got, pub in zip(descriptor.field_names, subsample.stats, descriptor.stats):
        tol = 3.0 * pub.std / math.sqrt(m) * (1.0 + noise_level)
        if abs(got.mean - pub.mean) > tol:
            return Validation(False, f"{name}: mean {got.mean:.6g} vs published {pub.mean:.6g}")
        if got.min < pub.min - tol or got.max > pub.max + tol:
            return Validation(False, f"{name}: range outside published bounds")
    return Validation(True)


def license_satisfies(template: License, spec: BuySpec) -> bool:
    if spec.exclusive_required and not template.exclusive:
        return False
    if not template.lifespan.covers(spec.min_lifespan):
        return False
    return spec.purposes <= template.permitted_uses


def market_search(spec: BuySpec, listings: Iterable[Listing],
                  seller_reputation: Callable[[str], float], buyer_reputation: float,
                  params: PricingParams = PricingParams()) -> list[Listing]:
    hits = []
    for lst in listings:
        if lst.status is not ListingStatus.ACTIVE or lst.category != spec.category:
            continue
        if lst.seller_id == spec.buyer_id:
            continue
        ppp = buyer_effective_price(lst.listing_price, buyer_reputation, params) / lst.count
        if ppp > spec.max_price_per_point:
            continue
        if lst.noise_level > spec.max_noise_tolerance:
            continue
        if seller_reputation(lst.seller_id) < spec.min_seller_reputation:
            continue
        if not license_satisfies(lst.license_template, spec):
            continue
        hits.append((ppp, lst.listed_at, lst.listing_id, lst))
    hits.sort(key=lambda h: h[:3])
    return [h[3] for h in hits]


@dataclass(frozen=True)
class Session:
    member_id: str
    reputation: float
    subsample_privilege: SubsamplePrivilege

    @property
    def waiver_only(self) -> bool:
        return self.subsample_privilege is SubsamplePrivilege.SUSPENDED


@dataclass(frozen=True)
class Settlement:
    txn_id: str
    amount: float
    license: License
    listing_status: ListingStatus


def derive_seed(*parts: Any) -> int:
    return zlib.crc32("/".join(str(p) for p in parts).encode())


# --- the marketplace ------------------------------------------------------------


class Market:
    """A single marketplace instance. One writer advances it."""

    def __init__(self, pricing: PricingParams = PricingParams(),
                 reputation: rep.ReputationParams = rep.ReputationParams(),
                 subsample: SubsamplePolicy = SubsamplePolicy(),
                 events: Optional[EventLedger] = None):
        self.pricing = pricing
        self.rep_params = reputation
        self.subsample_policy = subsample
        self.events = events if events is not None else EventLedger()
        self.rep = rep.ReputationLedger()
        self.members: dict[str, Member] = {}
        self.identified: set[str] = set()
        self.listings: dict[str, Listing] = {}
        self.transactions: dict[str, Transaction] = {}
        self.licenses: list[License] = []
        self.open_specs: dict[str, BuySpec] = {}
        self.subsamples: dict[str, Subsample] = {}
        self.locks: dict[str, str] = {}
        self._quota: dict[tuple[str, str, int], int] = {}
        self._counters = {"L": 0, "T": 0, "S": 0}
        self.now = 0

    # -- bookkeeping
    def _next_id(self, prefix: str) -> str:
        self._counters[prefix] += 1
        return f"{prefix}{self._counters[prefix]:06d}"

    def _emit(self, kind: EventKind, payload: dict[str, Any]) -> None:
        self.events.append(kind, payload, self.now)

    def _emit_notices(self, notices: list[rep.Notice]) -> None:
        for kind, payload in notices:
            self._emit(kind, payload)
            if kind is EventKind.MEMBER_EXPELLED:
                self._expel(payload["member"])
            elif kind is EventKind.SUBSAMPLING_SUSPENDED:
                m = self.members[payload["member"]]
                self.members[m.member_id] = dataclasses.replace(
                    m, subsample_privilege=SubsamplePrivilege.SUSPENDED)

    def _expel(self, member_id: str) -> None:
        m = self.members[member_id]
        self.members[member_id] = dataclasses.replace(m, expelled=True)
        self.open_specs.pop(member_id, None)
        for lst in list(self.listings.values()):
            if lst.seller_id == member_id and lst.status is ListingStatus.ACTIVE:
                self.withdraw_listing(lst.listing_id)
        for txn in list(self.transactions.values()):
            if txn.state.terminal or member_id not in (txn.buyer_id, txn.seller_id):
                continue
            if txn.state is TxnState.DATA_DELIVERED:
                continue
            self.apply(txn.txn_id, TxnEvent(Step.CANCEL))

    def reputation(self, member_id: str) -> float:
        return rep.reputation_of(self.rep, member_id, self.rep_params)

    def _member(self, member_id: str) -> Member:
        if member_id not in self.members:
            raise rep.UnknownMember(member_id)
        return self.members[member_id]

    def _require_active(self, member_id: str) -> Member:
        m = self._member(member_id)
        if m.expelled:
            raise AccessDenied(f"{member_id} has been expelled")
        return m

    # -- function 1: identification
    def register(self, member_id: str, roles: Iterable[Role | str], label: str = "") -> Member:
        if member_id in self.members:
            raise ValueError(f"member {member_id} already registered")
        m = Member(member_id, frozenset(Role(r) for r in roles), self.now, label=label)
        self.members[member_id] = m
        self.rep.add_member(member_id)
        return m

    def identify(self, member_id: str) -> Session:
        m = self._require_active(member_id)
        session = Session(member_id, self.reputation(member_id), m.subsample_privilege)
        self.identified.add(member_id)
        self._emit(EventKind.IDENTIFIED, {
            "member": member_id, "label": m.label,
            "roles": sorted(r.value for r in m.roles),
            "reputation": session.reputation,
            "subsample_privilege": session.subsample_privilege.value,
        })
        return session

    # -- function 4: product generation
    def active_licenses(self) -> list[License]:
        return [lic for lic in self.licenses if is_active(lic, self.now)]

    def active_listings(self, category: Optional[str] = None) -> list[Listing]:
        return [lst for lst in self.listings.values()
                if lst.status is ListingStatus.ACTIVE
                and (category is None or lst.category == category)]

    def demand(self, category: str) -> float:
        specs = sum(1 for s in self.open_specs.values() if s.category == category)
        return demand_index(specs, len(self.active_listings(category)), self.pricing)

    def generate_product(self, spec: SellSpec) -> Listing:
        seller = self._require_active(spec.seller_id)
        if Role.SELLER not in seller.roles:
            raise AccessDenied(f"{spec.seller_id} is not a seller")
        data = spec.dataset
        if not data.provenance.listable:
            raise UnlistableProvenance(f"{data.provenance.value} data cannot be listed")
        category = data.category
        verdict = check_seller_double_sale(self.active_licenses(), spec.seller_id, category,
                                           self.now)
        if not verdict.compliant:
            raise ExclusivityConflict(
                f"{spec.seller_id} holds an active exclusive licence on {category}")
        pending = any(lst.seller_id == spec.seller_id and lst.license_template.exclusive
                      for lst in self.active_listings(category))
        if pending:
            raise ExclusivityConflict(
                f"{spec.seller_id} already has an exclusive listing on {category}")

        risk = assess_risk(spec.impacts)
        listing_id = self._next_id("L")
        seed = spec.noise_seed
        if seed is None:
            seed = derive_seed(spec.seller_id, listing_id)
        noised = inject_noise(data, NoiseSpec(spec.noise_level, seed))
        descriptor = describe_dataset(noised, spec.noise_level)
        template = dataclasses.replace(spec.license_terms, seller_id=spec.seller_id,
                                       category=category, buyer_id=None, granted_at=None)
        quote = recommend_price(spec.base_unit_value, data.count, risk, spec.noise_level,
                                template, self.demand(category), self.pricing)
        if spec.ask_per_point is None:
            ask = quote.ask_basis * spec.ask_multiplier
        else:
            ask = spec.ask_per_point * data.count
        price = enforced_listing_price(ask, spec.noise_level, self.pricing)
        listing = Listing(listing_id, spec.seller_id, descriptor, risk, noised, template,
                          price, quote, self.now)
        self.listings[listing_id] = listing
        self._emit(EventKind.LISTED, {
            "listing_id": listing_id, "seller": spec.seller_id,
            "descriptor": descriptor.to_record(), "risk": risk.to_record(),
            "license": template.to_record(), "quote": quote.to_record(),
            "ask": ask, "listing_price": price, "provenance": data.provenance.value,
        })
        return listing

    def withdraw_listing(self, listing_id: str) -> Listing:
        lst = self.listings[listing_id]
        if lst.status is not ListingStatus.ACTIVE:
            raise ListingUnavailable(f"{listing_id} is {lst.status.value}")
        lst = dataclasses.replace(lst, status=ListingStatus.WITHDRAWN)
        self.listings[listing_id] = lst
        self._emit(EventKind.LISTING_WITHDRAWN, {"listing_id": listing_id,
                                                 "seller": lst.seller_id})
        return lst

    # -- functions 2, 3, 5: specification, search, match
    def search(self, spec: BuySpec) -> list[Listing]:
        self._require_active(spec.buyer_id)
        self.open_specs[spec.buyer_id] = spec
        candidates = [lst for lst in self.active_listings(spec.category)
                      if lst.listing_id not in self.locks
                      and not self.members[lst.seller_id].expelled]
        hits = market_search(spec, candidates, self.reputation,
                             self.reputation(spec.buyer_id), self.pricing)
        self._emit(EventKind.SEARCH_ISSUED, {
            "buyer": spec.buyer_id, "spec": spec.to_record(),
            "results": [h.listing_id for h in hits],
        })
        return hits

    def match(self, buyer_id: str, listing_id: str) -> Transaction:
        self._require_active(buyer_id)
        lst = self.listings.get(listing_id)
        if lst is None or lst.status is not ListingStatus.ACTIVE or listing_id in self.locks:
            raise ListingUnavailable(f"{listing_id} cannot be matched")
        price = buyer_effective_price(lst.listing_price, self.reputation(buyer_id),
                                      self.pricing)
        txn = Transaction(self._next_id("T"), buyer_id, listing_id, lst.seller_id, price)
        self.transactions[txn.txn_id] = txn
        if lst.license_template.exclusive:
            self.locks[listing_id] = txn.txn_id
        self._emit(EventKind.MATCHED, {
            "txn_id": txn.txn_id, "buyer": buyer_id, "seller": lst.seller_id,
            "listing_id": listing_id, "price": price,
            "listing_price": lst.listing_price,
        })
        return txn

    # -- function 6: subsample analysis
    def issue_subsample(self, txn_id: str, seed: Optional[int] = None) -> Subsample:
        txn = self.transactions[txn_id]
        buyer = self._require_active(txn.buyer_id)
        if buyer.subsample_privilege is SubsamplePrivilege.SUSPENDED:
            raise SubsamplingSuspendedError(f"{txn.buyer_id} may not request subsamples")
        lst = self.listings[txn.listing_id]
        key = (txn.buyer_id, lst.category, self.now // self.subsample_policy.window_ticks)
        if self._quota.get(key, 0) >= self.subsample_policy.cap:
            raise SubsampleQuotaExceeded(
                f"{txn.buyer_id} used {self.subsample_policy.cap} subsamples this window")
        if (txn.state, Step.REQUEST_SUBSAMPLE) not in TRANSITIONS:
            raise IllegalTransition(f"RequestSubsample is not legal in state {txn.state.value}")
        self._quota[key] = self._quota.get(key, 0) + 1
        if seed is None:
            seed = derive_seed("subsample", txn_id)
        sub = draw_subsample(lst, self.subsample_policy.fraction, seed,
                             self.subsample_policy.min_points)
        self.subsamples[txn_id] = sub
        self.transactions[txn_id] = advance(txn, Step.REQUEST_SUBSAMPLE)
        self._emit(EventKind.SUBSAMPLE_REQUESTED, {
            "txn_id": txn_id, "buyer": txn.buyer_id, "listing_id": lst.listing_id,
            "size": sub.size,
            "stats": {n: dataclasses.asdict(s) for n, s in zip(sub.points.field_names,
                                                               sub.stats)},
        })
        return sub

    def subsample_quota_left(self, buyer_id: str, category: str) -> int:
        key = (buyer_id, category, self.now // self.subsample_policy.window_ticks)
        return self.subsample_policy.cap - self._quota.get(key, 0)

    def check_subsample(self, txn_id: str) -> Validation:
        txn = self.transactions[txn_id]
        lst = self.listings[txn.listing_id]
        return validate_subsample(self.subsamples[txn_id], lst.descriptor, lst.noise_level)

    # -- transitions with monitors
    def apply(self, txn_id: str, event: TxnEvent | Step) -> Transaction:
        if not isinstance(event, TxnEvent):
            event = TxnEvent(event)
        step = event.step
        txn = self.transactions[txn_id]
        if step is Step.REQUEST_SUBSAMPLE:
            self.issue_subsample(txn_id)
            return self.transactions[txn_id]
        if step is Step.RELEASE_ESCROW:
            self.settle_exchange(txn_id)
            return self.transactions[txn_id]
        if step is Step.FUND_ESCROW:
            event = TxnEvent(step, txn.price)
        new = advance(txn, event)
        self.transactions[txn_id] = new
        base = {"txn_id": txn_id, "buyer": txn.buyer_id, "seller": txn.seller_id}
        notices: list[rep.Notice] = []

        if step is Step.BUYER_ACCEPTS_PRICE:
            self._emit(EventKind.PRICE_ACCEPTED, {**base, "price": txn.price})
        elif step is Step.BUYER_REJECTS_PRICE:
            self._emit(EventKind.PRICE_REJECTED, {**base, "price": txn.price})
        elif step is Step.WAIVE_SUBSAMPLE:
            self._emit(EventKind.SUBSAMPLE_WAIVED, base)
        elif step is Step.ACCEPT_SUBSAMPLE:
            self._emit(EventKind.SUBSAMPLE_ACCEPTED, base)
        elif step is Step.REJECT_SUBSAMPLE:
            # justification is judged by the orchestrator, not claimed by the buyer
            verdict = self.check_subsample(txn_id)
            justified = not verdict.passed
            self._emit(EventKind.SUBSAMPLE_REJECTED, {**base, "justified": justified,
                                                       "reason": verdict.reason})
            notices += rep.note_subsample_reject(self.rep, txn.buyer_id, justified,
                                                 self.now, self.rep_params)
            if justified:
                notices += rep.record_violation(self.rep, txn.seller_id, txn.buyer_id,
                                                self.now, self.rep_params)
        elif step is Step.FUND_ESCROW:
            self._emit(EventKind.ESCROW_FUNDED, {**base, "amount": new.escrow_balance})
        elif step is Step.DELIVER_DATA:
            lst = self.listings[txn.listing_id]
            self._emit(EventKind.DATA_DELIVERED, {**base, "listing_id": lst.listing_id,
                                                  "points": lst.count})
        elif step is Step.BUYER_REFUSES_FUNDING:
            notices += rep.record_violation(self.rep, txn.buyer_id, txn.seller_id,
                                            self.now, self.rep_params)
        elif step is Step.SELLER_REFUSES_DELIVERY:
            notices += rep.record_violation(self.rep, txn.seller_id, txn.buyer_id,
                                            self.now, self.rep_params)

        if new.state is TxnState.ABORTED:
            self.locks.pop(txn.listing_id, None)
            self._emit(EventKind.ABORTED, {**base, "reason": new.abort_reason.value,
                                           "from_state": txn.state.value,
                                           "refund": new.refunded})
        self._emit_notices(notices)
        return self.transactions[txn_id]

    # -- function 7: exchange
    def settle_exchange(self, txn_id: str) -> Settlement:
        txn = self.transactions[txn_id]
        if txn.state is not TxnState.DATA_DELIVERED:
            raise IllegalTransition(f"cannot settle from state {txn.state.value}")
        new = advance(txn, Step.RELEASE_ESCROW)
        self.transactions[txn_id] = new
        lst = self.listings[txn.listing_id]
        lic = lst.license_template.grant(txn.buyer_id, self.now, f"LIC-{txn_id}")
        self.licenses.append(lic)
        if lic.exclusive:
            lst = dataclasses.replace(lst, status=ListingStatus.SOLD)
            self.listings[lst.listing_id] = lst
        self.locks.pop(lst.listing_id, None)
        self.open_specs.pop(txn.buyer_id, None)
        self._emit(EventKind.SETTLED, {
            "txn_id": txn_id, "buyer": txn.buyer_id, "seller": txn.seller_id,
            "listing_id": lst.listing_id, "amount": new.released,
            "listing_price": lst.listing_price, "points": lst.count,
            "noise_level": lst.noise_level, "category": lst.category,
            "license": lic.to_record(), "listing_status": lst.status.value,
        })
        self._emit_notices(rep.record_outcome(self.rep, txn.buyer_id, txn.seller_id, 1,
                                              self.now, self.rep_params))
        return Settlement(txn_id, new.released, lic, lst.status)

    # -- read side
    def snapshot(self) -> dict[str, Any]:
        return {
            "members": {
                mid: {"expelled": m.expelled,
                      "subsample_privilege": m.subsample_privilege.value,
                      "reputation": self.reputation(mid)}
                for mid, m in sorted(self.members.items()) if mid in self.identified
            },
            "listings": {lid: lst.status.value for lid, lst in sorted(self.listings.items())},
            "transactions": {
                tid: _txn_view(t) for tid, t in sorted(self.transactions.items())
            },
            "licenses": sorted((lic.to_record() for lic in self.licenses),
                               key=lambda r: r["license_id"]),
        }


def _txn_view(t: Transaction) -> dict[str, Any]:
    return {"state": t.state.value,
            "reason": t.abort_reason.value if t.abort_reason else None,
            "consent_count": t.consent_count, "escrow_balance": t.escrow_balance,
            "released": t.released, "refunded": t.refunded}
