"""Shared domain types for the shared-buffer switch models.

Unit conventions used throughout the package:

- The buffer capacity ``B`` is counted in packets and every packet has unit
  size.
- Time is measured in abstract time units.  Every port drains exactly one
  packet per time unit, so a rate of ``r`` means ``r`` packets per time unit
  and is the same thing as "``r`` times one port's drain rate".
- A queue is identified by the pair (port, traffic class); at most one queue
  exists per pair.

All types in this module are immutable value objects and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping


class CapacityError(ValueError):
    """Total queued packets exceed the buffer capacity."""


@dataclass(frozen=True)
class UnitsConvention:
    """Capacity plus the normalization rules stated in the module docstring.

    ``buffer_size`` is in packets; port drain rate is fixed at one packet per
    time unit and all configured rates are dimensionless multiples of it.
    """

    buffer_size: int

    def __post_init__(self) -> None:
        if self.buffer_size < 1:
            raise ValueError(f"buffer size must be >= 1 packet, got {self.buffer_size}")


@dataclass(frozen=True)
class TrafficClass:
    """A traffic class: its admission weight alpha and its priority group."""

    class_id: int
    alpha: Fraction
    priority_id: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if self.alpha <= 0:
            raise ValueError(f"class {self.class_id}: alpha must be > 0, got {self.alpha}")


@dataclass(frozen=True)
class PriorityGroup:
    """A set of classes sharing one congested-queue count N_p.

    ``alpha_max`` is the largest alpha among member classes; it bounds the
    group's total buffer share (see fluid.occupancy_bound).
    """

    priority_id: int
    class_ids: tuple[int, ...]
    alpha_max: Fraction


def priority_groups(classes: Mapping[int, TrafficClass]) -> dict[int, PriorityGroup]:
    """Partition classes into their priority groups."""
    members: dict[int, list[int]] = {}
    for cls in classes.values():
        members.setdefault(cls.priority_id, []).append(cls.class_id)
    return {
        pid: PriorityGroup(
            priority_id=pid,
            class_ids=tuple(sorted(ids)),
            alpha_max=max(classes[c].alpha for c in ids),
        )
        for pid, ids in sorted(members.items())
    }


@dataclass(frozen=True, order=True)
class QueueId:
    """Queue identity: (port index, class id)."""

    port: int
    class_id: int

    def __str__(self) -> str:  # used in CSV/JSON keys
        return f"{self.port}:{self.class_id}"

    @staticmethod
    def parse(text: str) -> "QueueId":
        port, _, cls = text.partition(":")
        return QueueId(int(port), int(cls))


@dataclass(frozen=True)
class BufferSnapshot:
    """Instantaneous buffer state plus the aggregates the policies consume.

    ``occupancy`` is the total queued packets Q(t), ``remaining`` is
    B - Q(t).  ``congested_per_priority`` maps priority id -> N_p(t), the
    count of queues of that priority deemed congested under
    ``congestion_threshold`` (a queue is congested when its length exceeds
    the threshold; the default threshold 0 means "non-empty").
    ``dequeue_share`` maps each queue to its per-port-normalized dequeue
    rate gamma in [0, 1] under round-robin service.
    """

    timestamp: float
    buffer_size: int
    congestion_threshold: int
    lengths: Mapping[QueueId, int]
    occupancy: int
    remaining: int
    congested_per_priority: Mapping[int, int]
    dequeue_share: Mapping[QueueId, float]
    congested: frozenset[QueueId] = field(default_factory=frozenset)

    def is_congested(self, queue: QueueId) -> bool:
        return queue in self.congested

    def length(self, queue: QueueId) -> int:
        return self.lengths.get(queue, 0)


def derive_aggregates(
    lengths: Mapping[QueueId, int],
    class_priorities: Mapping[int, int],
    buffer_size: int,
    congestion_threshold: int = 0,
    timestamp: float = 0.0,
) -> BufferSnapshot:
    """Compute a BufferSnapshot from raw per-queue lengths.

    Round-robin with unit packets gives every served queue an equal share of
    its port: gamma = 1/n over the port's congested queues.  If a nonempty
    port has no queue above the congestion threshold (possible only when the
    threshold is > 0), the share falls back to the nonempty queues so that a
    serving port always has shares summing to 1.

    Raises CapacityError if the lengths sum beyond the buffer size.
    """
    total = 0
    per_port: dict[int, list[QueueId]] = {}
    for q, length in lengths.items():
        if length < 0:
            raise ValueError(f"queue {q}: negative length {length}")
        if q.class_id not in class_priorities:
            raise ValueError(f"queue {q}: unknown class {q.class_id}")
        total += length
        per_port.setdefault(q.port, []).append(q)
    if total > buffer_size:
        raise CapacityError(f"total occupancy {total} exceeds buffer size {buffer_size}")

    congested: set[QueueId] = {
        q for q, length in lengths.items() if length > congestion_threshold
    }
    n_per_priority: dict[int, int] = {pid: 0 for pid in set(class_priorities.values())}
    for q in congested:
        n_per_priority[class_priorities[q.class_id]] += 1

    share: dict[QueueId, float] = {}
    for port, queues in per_port.items():
        active = [q for q in queues if q in congested]
        if not active:
            active = [q for q in queues if lengths[q] > 0]
        n = len(active)
        for q in queues:
            share[q] = 1.0 / n if q in active else 0.0

    return BufferSnapshot(
        timestamp=timestamp,
        buffer_size=buffer_size,
        congestion_threshold=congestion_threshold,
        lengths=dict(lengths),
        occupancy=total,
        remaining=buffer_size - total,
        congested_per_priority=n_per_priority,
        dequeue_share=share,
        congested=frozenset(congested),
    )
