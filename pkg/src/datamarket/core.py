"""Shared domain types, dataset descriptors and the append-only event ledger."""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

import numpy as np


class MarketError(Exception):
    """Base class for every domain error raised by the marketplace."""


class EmptyDataset(MarketError):
    pass


class ClockViolation(MarketError):
    pass


class InvalidNoiseLevel(MarketError):
    pass


class Role(str, Enum):
    SELLER = "Seller"
    BUYER = "Buyer"


class SubsamplePrivilege(str, Enum):
    ACTIVE = "Active"
    SUSPENDED = "Suspended"


class Provenance(str, Enum):
    DIRECTLY_PROVIDED = "DirectlyProvided"
    BYPRODUCT_OF_ACTIVITY = "ByproductOfActivity"
    DERIVED_METADATA = "DerivedMetadata"

    @property
    def listable(self) -> bool:
        return self is not Provenance.DERIVED_METADATA


class EventKind(str, Enum):
    IDENTIFIED = "Identified"
    LISTED = "Listed"
    LISTING_WITHDRAWN = "ListingWithdrawn"
    SEARCH_ISSUED = "SearchIssued"
    MATCHED = "Matched"
    PRICE_ACCEPTED = "PriceAccepted"
    PRICE_REJECTED = "PriceRejected"
    SUBSAMPLE_REQUESTED = "SubsampleRequested"
    SUBSAMPLE_ACCEPTED = "SubsampleAccepted"
    SUBSAMPLE_REJECTED = "SubsampleRejected"
    SUBSAMPLE_WAIVED = "SubsampleWaived"
    ESCROW_FUNDED = "EscrowFunded"
    DATA_DELIVERED = "DataDelivered"
    SETTLED = "Settled"
    ABORTED = "Aborted"
    REPUTATION_UPDATED = "ReputationUpdated"
    LICENSE_VIOLATION_REPORTED = "LicenseViolationReported"
    MEMBER_EXPELLED = "MemberExpelled"
    SUBSAMPLING_SUSPENDED = "SubsamplingSuspended"


@dataclass(frozen=True)
class Member:
    member_id: str
    roles: frozenset[Role]
    joined_at: int = 0
    subsample_privilege: SubsamplePrivilege = SubsamplePrivilege.ACTIVE
    expelled: bool = False
    label: str = ""

    def __post_init__(self):
        if not self.roles:
            raise ValueError("a member needs at least one role")


@dataclass(frozen=True)
class DataPoint:
    timestamp: int
    values: tuple[float, ...]
    field_names: tuple[str, ...]


class DataSet:
    """A seller's time series, stored column-wise.

    ``values`` has shape (count, n_fields). Arrays are made read-only so a
    DataSet behaves as an immutable value.
    """

    __slots__ = ("timestamps", "values", "field_names", "category", "provenance")

    def __init__(
        self,
        timestamps: Sequence[int] | np.ndarray,
        values: Sequence[Sequence[float]] | np.ndarray,
        field_names: Sequence[str],
        category: str,
        provenance: Provenance = Provenance.DIRECTLY_PROVIDED,
    ):
        ts = np.asarray(timestamps, dtype=np.int64).reshape(-1)
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if ts.size == 0:
            raise EmptyDataset("dataset has no points")
        if vals.shape != (ts.size, len(field_names)):
            raise ValueError(
                f"values shape {vals.shape} does not match "
                f"{ts.size} points x {len(field_names)} fields"
            )
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError("timestamps must be strictly increasing")
        ts.setflags(write=False)
        vals.setflags(write=False)
        self.timestamps = ts
        self.values = vals
        self.field_names = tuple(field_names)
        self.category = category
        self.provenance = Provenance(provenance)

    @classmethod
    def from_points(cls, points: Sequence[DataPoint], category: str,
                    provenance: Provenance = Provenance.DIRECTLY_PROVIDED) -> "DataSet":
        if not points:
            raise EmptyDataset("dataset has no points")
        names = points[0].field_names
        if any(p.field_names != names for p in points):
            raise ValueError("all points must share the same field names")
        return cls([p.timestamp for p in points], [p.values for p in points],
                   names, category, provenance)

    def with_values(self, values: np.ndarray) -> "DataSet":
        return DataSet(self.timestamps, values, self.field_names, self.category,
                       self.provenance)

    @property
    def count(self) -> int:
        return int(self.timestamps.size)

    @property
    def points(self) -> list[DataPoint]:
        return [
            DataPoint(int(t), tuple(float(v) for v in row), self.field_names)
            for t, row in zip(self.timestamps, self.values)
        ]

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DataSet):
            return NotImplemented
        return (
            self.field_names == other.field_names
            and self.category == other.category
            and self.provenance == other.provenance
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self) -> str:
        return (f"DataSet(category={self.category!r}, count={self.count}, "
                f"fields={self.field_names})")


@dataclass(frozen=True)
class FieldStats:
    min: float
    max: float
    mean: float
    std: float


@dataclass(frozen=True)
class DataDescriptor:
    category: str
    count: int
    time_range: tuple[int, int]
    field_names: tuple[str, ...]
    stats: tuple[FieldStats, ...]
    declared_noise_level: float

    def to_record(self) -> dict[str, Any]:
        return {
            "category": self.category,
            "count": self.count,
            "time_range": list(self.time_range),
            "fields": {
                name: {"min": s.min, "max": s.max, "mean": s.mean, "std": s.std}
                for name, s in zip(self.field_names, self.stats)
            },
            "declared_noise_level": self.declared_noise_level,
        }

    @classmethod
    def from_record(cls, rec: dict[str, Any]) -> "DataDescriptor":
        names = tuple(rec["fields"])
        return cls(
            category=rec["category"],
            count=rec["count"],
            time_range=tuple(rec["time_range"]),
            field_names=names,
            stats=tuple(FieldStats(**rec["fields"][n]) for n in names),
            declared_noise_level=rec["declared_noise_level"],
        )


def field_stats(values: np.ndarray) -> tuple[FieldStats, ...]:
    """Per-column min/max/mean and population std."""
    means = values.mean(axis=0)
    # clip guards mean outside [min, max] by one ulp on constant columns
    mins, maxs = values.min(axis=0), values.max(axis=0)
    means = np.clip(means, mins, maxs)
    stds = values.std(axis=0)
    return tuple(
        FieldStats(float(lo), float(hi), float(mu), float(sd))
        for lo, hi, mu, sd in zip(mins, maxs, means, stds)
    )


def describe_dataset(data: DataSet, declared_noise: float) -> DataDescriptor:
    if data is None or data.count == 0:
        raise EmptyDataset("cannot describe an empty dataset")
    if not 0.0 <= declared_noise <= 1.0:
        raise InvalidNoiseLevel(f"declared noise {declared_noise} outside [0, 1]")
    return DataDescriptor(
        category=data.category,
        count=data.count,
        time_range=(int(data.timestamps[0]), int(data.timestamps[-1])),
        field_names=data.field_names,
        stats=field_stats(data.values),
        declared_noise_level=float(declared_noise),
    )


# --- event ledger -----------------------------------------------------------


@dataclass(frozen=True)
class MarketEvent:
    seq: int
    tick: int
    kind: EventKind
    payload: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        # field order is fixed so exported logs hash reproducibly
        payload = json.dumps(self.payload, sort_keys=True, separators=(",", ":"),
                             allow_nan=False)
        return (f'{{"seq":{self.seq},"tick":{self.tick},'
                f'"kind":{json.dumps(self.kind.value)},"payload":{payload}}}')

    @classmethod
    def from_json(cls, line: str) -> "MarketEvent":
        rec = json.loads(line)
        return cls(rec["seq"], rec["tick"], EventKind(rec["kind"]), rec["payload"])


class EventLedger:
    """Append-only marketplace log. Single writer, any number of readers."""

    def __init__(self, events: Iterable[MarketEvent] = ()):
        self._events: list[MarketEvent] = []
        self._lock = threading.Lock()
        for ev in events:
            self._check_and_store(ev)

    def _check_and_store(self, ev: MarketEvent) -> None:
        if self._events:
            last = self._events[-1]
            if ev.seq != last.seq + 1:
                raise ValueError(f"non-contiguous seq {ev.seq} after {last.seq}")
            if ev.tick < last.tick:
                raise ClockViolation(f"tick {ev.tick} precedes last tick {last.tick}")
        elif ev.seq != 1:
            raise ValueError("ledger must start at seq 1")
        self._events.append(ev)

    def append(self, kind: EventKind | str, payload: dict[str, Any], tick: int) -> MarketEvent:
        with self._lock:
            if self._events and tick < self._events[-1].tick:
                raise ClockViolation(
                    f"tick {tick} precedes last tick {self._events[-1].tick}")
            seq = self._events[-1].seq + 1 if self._events else 1
            ev = MarketEvent(seq, int(tick), EventKind(kind), payload)
            self._events.append(ev)
            return ev

    @property
    def last_seq(self) -> int:
        return self._events[-1].seq if self._events else 0

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[MarketEvent]:
        return iter(list(self._events))

    def __getitem__(self, i):
        return self._events[i]

    def of_kind(self, *kinds: EventKind) -> list[MarketEvent]:
        return [e for e in self._events if e.kind in kinds]

    def export_lines(self) -> str:
        return "".join(e.to_json() + "\n" for e in self._events)

    def digest(self) -> str:
        return hashlib.sha256(self.export_lines().encode()).hexdigest()

    def write_jsonl(self, path: str | Path) -> None:
        Path(path).write_text(self.export_lines())

    @classmethod
    def read_jsonl(cls, path: str | Path) -> "EventLedger":
        with open(path) as fh:
            return cls(MarketEvent.from_json(line) for line in fh if line.strip())


def append_event(ledger: EventLedger, event_kind: EventKind | str,
                 payload: dict[str, Any], tick: int) -> MarketEvent:
    return ledger.append(event_kind, payload, tick)
