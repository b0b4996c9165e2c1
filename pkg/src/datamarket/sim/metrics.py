"""Scenario metrics, computed from the event ledger alone.

Everything here is a pure function of the events, so ``report`` over an
exported ledger reproduces ``simulate``'s metrics byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from collections import Counter, defaultdict
from typing import Any, Iterable, Optional

from ..core import EventKind, MarketEvent

NOISE_BANDS = ((0.0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0))


def band_label(lo: float, hi: float) -> str:
    close = "]" if hi == 1.0 else ")"
    return f"[{lo:.2f},{hi:.2f}{close}"


def noise_band(level: float) -> str:
    for lo, hi in NOISE_BANDS:
        if lo <= level < hi or (hi == 1.0 and level == 1.0):
            return band_label(lo, hi)
    raise ValueError(f"noise level {level} outside [0, 1]")


def event_log_hash(events: Iterable[MarketEvent]) -> str:
    h = hashlib.sha256()
    for ev in events:
        h.update((ev.to_json() + "\n").encode())
    return h.hexdigest()


def _unit_cost(amount: float, points: int) -> float:
    return amount / points if points else 0.0


def compute_metrics(events: Iterable[MarketEvent], config: Optional[Any] = None) -> dict[str, Any]:
    """``config`` is accepted for symmetry with run_scenario; the ledger is
    self-describing so it is not consulted."""
    events = list(events)
    labels: dict[str, str] = {}
    settled = 0
    aborted: Counter[str] = Counter()
    band_amount: dict[str, float] = defaultdict(float)
    band_points: dict[str, int] = defaultdict(int)
    spend_by_label: dict[str, list[float]] = defaultdict(list)
    points_by_label: dict[str, int] = defaultdict(int)
    funded, released, refunded = [], [], []
    trajectories: dict[str, list[list[float]]] = defaultdict(list)
    expelled: dict[str, int] = {}
    suspended: dict[str, dict[str, int]] = {}

    for ev in events:
        p = ev.payload
        if ev.kind is EventKind.IDENTIFIED:
            if p["member"] not in labels:
                labels[p["member"]] = p.get("label", "")
                trajectories[p["member"]].append([ev.tick, p["reputation"]])
        elif ev.kind is EventKind.SETTLED:
            settled += 1
            band = noise_band(p["noise_level"])
            band_amount[band] += p["amount"]
            band_points[band] += p["points"]
            label = labels.get(p["buyer"], "")
            spend_by_label[label].append(p["amount"])
            points_by_label[label] += p["points"]
            released.append(p["amount"])
        elif ev.kind is EventKind.ABORTED:
            aborted[p["reason"]] += 1
            if p.get("refund"):
                refunded.append(p["refund"])
        elif ev.kind is EventKind.ESCROW_FUNDED:
            funded.append(p["amount"])
        elif ev.kind is EventKind.REPUTATION_UPDATED:
            trajectories[p["member"]].append([ev.tick, p["new"]])
        elif ev.kind is EventKind.MEMBER_EXPELLED:
            expelled.setdefault(p["member"], ev.tick)
        elif ev.kind is EventKind.SUBSAMPLING_SUSPENDED:
            suspended.setdefault(p["member"], {"tick": ev.tick,
                                               "unjustified_rejects": p["unjustified_rejects"]})

    def cost(label: str) -> float:
        return _unit_cost(math.fsum(spend_by_label[label]), points_by_label[label])

    adversary, honest = cost("AdversaryBuyer"), cost("HonestBuyer")
    spend, receipts, refunds = math.fsum(funded), math.fsum(released), math.fsum(refunded)
    return {
        "settled_count": settled,
        "aborted_by_reason": dict(sorted(aborted.items())),
        "mean_unit_price_by_noise_band": {
            band_label(lo, hi): _unit_cost(band_amount[band_label(lo, hi)],
                                           band_points[band_label(lo, hi)])
            for lo, hi in NOISE_BANDS
        },
        "adversary_cost_per_point": adversary,
        "honest_cost_per_point": honest,
        "adversary_to_honest_ratio": adversary / honest if honest else 0.0,
        "junk_seller_expulsion_tick": {
            m: expelled.get(m) for m, lab in sorted(labels.items()) if lab == "JunkSeller"
        },
        "expelled": dict(sorted(expelled.items())),
        "subsampling_suspended": dict(sorted(suspended.items())),
        "currency": {
            "buyer_spend": spend,
            "seller_receipts": receipts,
            "refunds": refunds,
            "held_in_escrow": math.fsum(funded + [-x for x in released + refunded]),
        },
        "final_reputation": {m: traj[-1][1] for m, traj in sorted(trajectories.items())},
        "event_count": len(events),
        "event_log_hash": event_log_hash(events),
        "reputation_trajectories": dict(sorted(trajectories.items())),
        "labels": dict(sorted(labels.items())),
    }


def metrics_json(metrics: dict[str, Any]) -> str:
    return json.dumps(metrics, indent=2, sort_keys=True) + "\n"


def trajectories_csv(metrics: dict[str, Any]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["member", "label", "tick", "reputation"])
    labels = metrics["labels"]
    for member, series in metrics["reputation_trajectories"].items():
        for tick, value in series:
            writer.writerow([member, labels.get(member, ""), tick, repr(value)])
    return buf.getvalue()


def metrics_text(metrics: dict[str, Any]) -> str:
    cur = metrics["currency"]
    lines = [
        f"events            {metrics['event_count']}",
        f"event_log_hash    {metrics['event_log_hash']}",
        f"settled           {metrics['settled_count']}",
        "aborted           " + (", ".join(f"{k}={v}" for k, v in
                                          metrics["aborted_by_reason"].items()) or "none"),
        "unit price by noise band:",
    ]
    for band, price in metrics["mean_unit_price_by_noise_band"].items():
        lines.append(f"  {band:<12} {price:.4f}")
    lines += [
        f"adversary cost/pt {metrics['adversary_cost_per_point']:.4f}",
        f"honest cost/pt    {metrics['honest_cost_per_point']:.4f}",
        f"ratio             {metrics['adversary_to_honest_ratio']:.4f}",
        f"junk expulsions   {metrics['junk_seller_expulsion_tick']}",
        f"suspensions       {metrics['subsampling_suspended']}",
        f"currency          spend={cur['buyer_spend']:.4f} receipts={cur['seller_receipts']:.4f}"
        f" refunds={cur['refunds']:.4f} held={cur['held_in_escrow']:.4f}",
    ]
    return "\n".join(lines) + "\n"
