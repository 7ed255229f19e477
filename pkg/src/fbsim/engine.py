"""Deterministic discrete-event packet simulator of one shared-buffer switch.

One event loop per run: packet arrivals consult the configured admission
policy against the live buffer state, every port serves its queues
round-robin at one packet per time unit, and (for FBA) a controller
periodically re-emits effective alphas.  Simultaneous events are ordered
arrivals -> service completions -> controller ticks, then by sequence
number, so identical configurations always produce bit-identical traces.

The trace records every admit/drop/departure with the threshold used, plus
controller ticks and periodic occupancy samples.
"""

from __future__ import annotations

import csv
import heapq
import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Optional

from .core import QueueId, derive_aggregates
from .policies import (
    SHARED_QUEUE_CLASS,
    THRESHOLD_EPS,
    PolicyKind,
    fb_effective_alpha,
)
from .workloads import ScenarioConfig, build_sources, source_spans

ACTION_ADMIT = "admit"
ACTION_DROP = "drop"
ACTION_DEPART = "depart"
ACTION_SOURCE = "source_change"

TRACE_COLUMNS = ("time", "port", "class", "queue_len", "action", "threshold")


class EngineInvariantError(RuntimeError):
    """An internal invariant (e.g. buffer capacity) was violated."""


class EventKind(IntEnum):
    """Tie-break rank at equal timestamps is the enum value."""

    SOURCE_STATE_CHANGE = 0
    ARRIVAL = 1
    SERVICE_COMPLETION = 2
    CONTROLLER_TICK = 3


class Event(NamedTuple):
    time: float
    kind: int
    seq: int
    payload: tuple


@dataclass
class EventTrace:
    """Time-ordered record of everything a run did.

    ``records`` rows are (time, port, class_id, action, queue_len,
    threshold, occupancy_after, source_id); queue_len is the length after
    the action for admits/departs and the length at the decision for drops.
    ``ticks`` holds (time, {queue: effective alpha}) controller emissions.
    """

    queue_ids: tuple[QueueId, ...]
    records: list[tuple] = field(default_factory=list)
    ticks: list[tuple[float, dict[QueueId, float]]] = field(default_factory=list)
    samples: list[tuple[float, int]] = field(default_factory=list)
    initial_lengths: dict[QueueId, int] = field(default_factory=dict)
    final_lengths: dict[QueueId, int] = field(default_factory=dict)
    horizon: float = 0.0

    def queue_counts(self) -> dict[QueueId, dict[str, int]]:
        """Per-queue arrival/admit/drop/departure totals."""
        counts = {
            q: {"arrivals": 0, "admitted": 0, "dropped": 0, "departed": 0}
            for q in self.queue_ids
        }
        for time, port, class_id, action, *_ in self.records:
            if action == ACTION_SOURCE:
                continue
            q = self._record_queue(port, class_id)
            if action == ACTION_ADMIT:
                counts[q]["arrivals"] += 1
                counts[q]["admitted"] += 1
            elif action == ACTION_DROP:
                counts[q]["arrivals"] += 1
                counts[q]["dropped"] += 1
            elif action == ACTION_DEPART:
                counts[q]["departed"] += 1
        return counts

    def _record_queue(self, port: int, class_id: int) -> QueueId:
        q = QueueId(port, class_id)
        return q if q in self._queue_set() else QueueId(port, SHARED_QUEUE_CLASS)

    def _queue_set(self) -> frozenset[QueueId]:
        if not hasattr(self, "_qset"):
            self._qset = frozenset(self.queue_ids)
        return self._qset

    def verify_conservation(self) -> None:
        """arrivals = admitted + dropped and admitted + initial = departed +
        final length, per queue.  Raises EngineInvariantError on mismatch."""
        counts = self.queue_counts()
        for q in self.queue_ids:
            c = counts[q]
            if c["arrivals"] != c["admitted"] + c["dropped"]:
                raise EngineInvariantError(f"{q}: arrivals != admitted + dropped: {c}")
            residue = self.initial_lengths.get(q, 0) + c["admitted"] - c["departed"]
            if residue != self.final_lengths.get(q, 0):
                raise EngineInvariantError(
                    f"{q}: admitted + initial != departed + final ({c}, "
                    f"final={self.final_lengths.get(q, 0)})"
                )


class SwitchState:
    """Mutable per-run switch state: queue lengths, congestion counters,
    round-robin cursors, the FBA table in force, and the clock.

    Counters are maintained incrementally; ``snapshot()`` rebuilds the same
    aggregates through core.derive_aggregates for cross-checking.
    """

    def __init__(self, config: ScenarioConfig):
        config.validate()
        self.config = config
        self.buffer_size = config.buffer_size
        self.cong_thr = config.congestion_threshold
        self.single = config.queue_mode == "single"
        self.policy_kind = config.policy
        self.clock = 0.0

        self.class_alpha = {c.class_id: float(c.alpha) for c in config.classes}
        self.class_prio = {c.class_id: c.priority_id for c in config.classes}
        self.alpha_override = {q: float(a) for q, a in config.alpha_overrides.items()}
        prios = sorted(set(self.class_prio.values()))
        if self.single:
            prios.append(SHARED_QUEUE_CLASS)
        self.prio_index = {p: i for i, p in enumerate(prios)}

        if self.single:
            self.queue_ids = tuple(QueueId(p, SHARED_QUEUE_CLASS) for p in range(config.n_ports))
        else:
            self.queue_ids = tuple(
                QueueId(p, c.class_id)
                for p in range(config.n_ports)
                for c in config.classes
            )
        self.q_index = {q: i for i, q in enumerate(self.queue_ids)}
        n = len(self.queue_ids)
        self.q_prio = [
            self.prio_index[
                SHARED_QUEUE_CLASS if self.single else self.class_prio[q.class_id]
            ]
            for q in self.queue_ids
        ]

        self.lengths = [0] * n
        self.total = 0
        self.cong_prio = [0] * len(prios)
        self.total_congested = 0
        self.active_port = [0] * config.n_ports
        self.nonempty_port = [0] * config.n_ports
        self.port_queues = [[] for _ in range(config.n_ports)]
        for i, q in enumerate(self.queue_ids):
            self.port_queues[q.port].append(i)
        self.rr_cursor = [0] * config.n_ports
        self.port_busy = [False] * config.n_ports
        self.fifo: Optional[list[deque]] = (
            [deque() for _ in range(config.n_ports)] if self.single else None
        )

        for q, length in sorted(config.initial_lengths.items()):
            target = QueueId(q.port, SHARED_QUEUE_CLASS) if self.single else q
            qi = self.q_index[target]
            for _ in range(length):
                self._bump(qi, +1)
            if self.single and length:
                self.fifo[q.port].extend([q.class_id] * length)

        # FBA controller table (per queue index); None means no table yet /
        # continuous recomputation (period == 0)
        self.fba_table: Optional[list[float]] = None

        # optional fixed snapshot staleness (hardware-sync modelling)
        self.staleness = config.snapshot_staleness
        self._sync_time = -math.inf
        self._stale: Optional[tuple] = None
        if self.staleness > 0:
            self._sync(0.0)

    # -- incremental counter maintenance ------------------------------------

    def _bump(self, qi: int, delta: int) -> None:
        old = self.lengths[qi]
        new = old + delta
        self.lengths[qi] = new
        self.total += delta
        port = self.queue_ids[qi].port
        if delta > 0:
            if old == 0:
                self.nonempty_port[port] += 1
            if old == self.cong_thr:
                self.cong_prio[self.q_prio[qi]] += 1
                self.total_congested += 1
                self.active_port[port] += 1
        else:
            if new == 0:
                self.nonempty_port[port] -= 1
            if new == self.cong_thr:
                self.cong_prio[self.q_prio[qi]] -= 1
                self.total_congested -= 1
                self.active_port[port] -= 1
        if self.total > self.buffer_size:
            raise EngineInvariantError(
                f"occupancy {self.total} exceeds buffer {self.buffer_size}"
            )

    def _sync(self, time: float) -> None:
        self._stale = (
            list(self.lengths),
            self.total,
            list(self.cong_prio),
            self.total_congested,
            list(self.active_port),
        )
        self._sync_time = time

    def _view(self, time: float) -> tuple:
        """(lengths, total, cong_prio, total_congested, active_port) as seen
        by the admission logic: live, or the last synced copy under a
        positive staleness."""
        if self.staleness <= 0:
            return (self.lengths, self.total, self.cong_prio, self.total_congested, self.active_port)
        due = math.floor(time / self.staleness) * self.staleness
        if due > self._sync_time:
            self._sync(due)
        return self._stale

    # -- policy-facing helpers ----------------------------------------------

    def alpha_of(self, class_id: int, port: int) -> float:
        return self.alpha_override.get(QueueId(port, class_id), self.class_alpha[class_id])

    def effective_alpha(self, qi: int, class_id: int, view: tuple) -> float:
        """FB's effective alpha for a packet of ``class_id`` arriving at
        queue index ``qi``, counting the arriving queue as congested."""
        lengths, _, cong_prio, total_congested, active_port = view
        congested = lengths[qi] > self.cong_thr
        alpha = self.alpha_of(class_id, self.queue_ids[qi].port)
        if self.single:
            n = total_congested + (0 if congested else 1)
            return fb_effective_alpha(alpha, n, 1.0)
        n_p = cong_prio[self.q_prio[qi]] + (0 if congested else 1)
        port = self.queue_ids[qi].port
        gamma = 1.0 / (active_port[port] + (0 if congested else 1))
        return fb_effective_alpha(alpha, n_p, gamma)

    def snapshot(self, time: Optional[float] = None):
        """Rebuild a BufferSnapshot from raw lengths (cross-check path)."""
        class_prios = dict(self.class_prio)
        if self.single:
            class_prios[SHARED_QUEUE_CLASS] = SHARED_QUEUE_CLASS
        return derive_aggregates(
            {q: self.lengths[i] for i, q in enumerate(self.queue_ids)},
            class_prios,
            self.buffer_size,
            self.cong_thr,
            self.clock if time is None else time,
        )


def enqueue_arrival(
    state: SwitchState,
    class_id: int,
    port: int,
    time: float,
    source_id: int,
    trace: EventTrace,
) -> bool:
    """Admit or drop one arriving packet; returns True when admitted."""
    queue_class = SHARED_QUEUE_CLASS if state.single else class_id
    qi = state.q_index[QueueId(port, queue_class)]
    view = state._view(time)
    lengths_v, total_v = view[0], view[1]
    length = lengths_v[qi]

    kind = state.policy_kind
    if kind is PolicyKind.COMPLETE_SHARING:
        threshold = math.inf
        admit = total_v < state.buffer_size
    else:
        remaining = state.buffer_size - total_v
        if kind is PolicyKind.DYNAMIC_THRESHOLDS:
            a_eff = state.alpha_of(class_id, port)
        elif kind is PolicyKind.FB or kind is PolicyKind.FB_SINGLE_QUEUE:
            a_eff = state.effective_alpha(qi, class_id, view)
        else:  # FBA
            if state.single:
                a_eff = state.alpha_of(class_id, port)
            elif state.fba_table is not None:
                a_eff = state.fba_table[qi]
            else:
                a_eff = state.effective_alpha(qi, class_id, view)
        threshold = a_eff * remaining
        admit = threshold - length > THRESHOLD_EPS
    admit = admit and state.total < state.buffer_size

    if admit:
        state._bump(qi, +1)
        if state.single:
            state.fifo[port].append(class_id)
        trace.records.append(
            (time, port, class_id, ACTION_ADMIT, state.lengths[qi], threshold, state.total, source_id)
        )
    else:
        trace.records.append(
            (time, port, class_id, ACTION_DROP, length, threshold, state.total, source_id)
        )
    return admit


def service_port(state: SwitchState, port: int, time: float, trace: EventTrace) -> bool:
    """Serve one packet from the round-robin-next nonempty queue of ``port``.

    Empty queues are skipped without consuming a turn.  Returns True when
    the port still has packets afterwards (caller reschedules)."""
    if state.nonempty_port[port] == 0:
        return False
    if state.single:
        qi = state.port_queues[port][0]
        class_id = state.fifo[port].popleft()
    else:
        queues = state.port_queues[port]
        cursor = state.rr_cursor[port]
        for off in range(len(queues)):
            j = (cursor + off) % len(queues)
            if state.lengths[queues[j]] > 0:
                qi = queues[j]
                state.rr_cursor[port] = (j + 1) % len(queues)
                break
        class_id = state.queue_ids[qi].class_id
    state._bump(qi, -1)
    trace.records.append(
        (time, port, class_id, ACTION_DEPART, state.lengths[qi], None, state.total, -1)
    )
    return state.nonempty_port[port] > 0


def controller_tick(state: SwitchState, time: float, trace: EventTrace) -> None:
    """Recompute the FBA alpha table from the instantaneous state."""
    if state.single:
        trace.ticks.append((time, {}))
        return
    view = state._view(time)
    table = [
        state.effective_alpha(qi, state.queue_ids[qi].class_id, view)
        for qi in range(len(state.queue_ids))
    ]
    state.fba_table = table
    trace.ticks.append(
        (time, {q: table[i] for i, q in enumerate(state.queue_ids)})
    )


def run(config: ScenarioConfig) -> EventTrace:
    """Simulate the scenario to its horizon and return the full trace."""
    state = SwitchState(config)
    # key initial fills by the engine's queue ids (the shared per-port queue
    # aggregates per-class fills in single-queue mode)
    initial: dict[QueueId, int] = {}
    for q, length in config.initial_lengths.items():
        target = QueueId(q.port, SHARED_QUEUE_CLASS) if state.single else q
        initial[target] = initial.get(target, 0) + length
    trace = EventTrace(
        queue_ids=state.queue_ids,
        initial_lengths=initial,
        horizon=config.horizon,
    )

    events: list[Event] = []
    seq = 0
    for time, class_id, port, source_id in build_sources(
        config.sources, config.seed, config.horizon
    ):
        events.append(Event(time, EventKind.ARRIVAL, seq, (class_id, port, source_id)))
        seq += 1
    for source_id, class_id, port, start, stop in source_spans(config.sources, config.horizon):
        events.append(Event(start, EventKind.SOURCE_STATE_CHANGE, seq, (class_id, port, source_id, "on")))
        seq += 1
        if stop is not None and stop <= config.horizon:
            events.append(Event(stop, EventKind.SOURCE_STATE_CHANGE, seq, (class_id, port, source_id, "off")))
            seq += 1
    if config.policy is PolicyKind.FBA and config.fba_period > 0:
        controller_tick(state, 0.0, trace)  # table in force from the start
        ticks = int(math.floor(config.horizon / config.fba_period))
        for k in range(1, ticks + 1):
            events.append(Event(k * config.fba_period, EventKind.CONTROLLER_TICK, seq, ()))
            seq += 1
    for port in range(config.n_ports):
        if state.nonempty_port[port] > 0:
            events.append(Event(1.0, EventKind.SERVICE_COMPLETION, seq, (port,)))
            seq += 1
            state.port_busy[port] = True
    heapq.heapify(events)

    while events:
        ev = heapq.heappop(events)
        if ev.time > config.horizon + 1e-12:
            break
        state.clock = ev.time
        if ev.kind == EventKind.ARRIVAL:
            class_id, port, source_id = ev.payload
            admitted = enqueue_arrival(state, class_id, port, ev.time, source_id, trace)
            if admitted and not state.port_busy[port]:
                state.port_busy[port] = True
                heapq.heappush(
                    events, Event(ev.time + 1.0, EventKind.SERVICE_COMPLETION, seq, (port,))
                )
                seq += 1
        elif ev.kind == EventKind.SERVICE_COMPLETION:
            (port,) = ev.payload
            if service_port(state, port, ev.time, trace):
                heapq.heappush(
                    events, Event(ev.time + 1.0, EventKind.SERVICE_COMPLETION, seq, (port,))
                )
                seq += 1
            else:
                state.port_busy[port] = False
        elif ev.kind == EventKind.CONTROLLER_TICK:
            controller_tick(state, ev.time, trace)
        else:  # SOURCE_STATE_CHANGE: bookkeeping only
            class_id, port, source_id, _flag = ev.payload
            queue_class = SHARED_QUEUE_CLASS if state.single else class_id
            qi = state.q_index[QueueId(port, queue_class)]
            trace.records.append(
                (ev.time, port, class_id, ACTION_SOURCE, state.lengths[qi], None, state.total, source_id)
            )

    trace.final_lengths = {q: state.lengths[i] for i, q in enumerate(state.queue_ids)}
    trace.samples = _sample_occupancy(
        trace.records, config.sample_interval, config.horizon, sum(config.initial_lengths.values())
    )
    return trace


def _sample_occupancy(
    records: list[tuple], interval: float, horizon: float, initial: int
) -> list[tuple[float, int]]:
    """Occupancy at 0, interval, 2*interval, ... horizon (step function of
    the recorded events)."""
    samples: list[tuple[float, int]] = []
    occupancy = initial
    idx = 0
    steps = int(math.floor(horizon / interval + 1e-9))
    for k in range(steps + 1):
        t = k * interval
        while idx < len(records) and records[idx][0] <= t + 1e-12:
            if records[idx][3] != ACTION_SOURCE:
                occupancy = records[idx][6]
            idx += 1
        samples.append((t, occupancy))
    return samples


# -- export ------------------------------------------------------------------


def write_trace_csv(trace: EventTrace, path) -> None:
    """Trace rows as CSV: time, port, class, queue_len, action, threshold."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for time, port, class_id, action, qlen, threshold, _occ, _src in trace.records:
            thr = "" if threshold is None else ("inf" if threshold == math.inf else repr(threshold))
            writer.writerow([repr(time), port, class_id, qlen, action, thr])


def write_samples_csv(trace: EventTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("time", "occupancy"))
        for t, occ in trace.samples:
            writer.writerow([repr(t), occ])


def run_summary(trace: EventTrace) -> dict:
    """JSON-ready per-queue totals."""
    counts = trace.queue_counts()
    return {
        "horizon": trace.horizon,
        "queues": {
            str(q): {
                **counts[q],
                "initial": trace.initial_lengths.get(q, 0),
                "final": trace.final_lengths.get(q, 0),
            }
            for q in trace.queue_ids
        },
    }


def write_run_summary(trace: EventTrace, path) -> None:
    with open(path, "w") as fh:
        json.dump(run_summary(trace), fh, indent=2, sort_keys=True)
        fh.write("\n")
