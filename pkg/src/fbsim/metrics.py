"""Post-process event traces into measurement vocabulary.

Covers per-queue drop/admission accounting, first-drop times, burst
absorption (admitted fraction and open-loop drain-completion time, the
query-completion proxy), per-port throughput, and occupancy statistics
(mean, nearest-rank 99th percentile over the periodic samples, true max).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import QueueId
from .engine import ACTION_ADMIT, ACTION_DEPART, ACTION_DROP, ACTION_SOURCE, EventTrace
from .workloads import Burst, ScenarioConfig


@dataclass
class RunMetrics:
    per_queue: dict[str, dict[str, int]]
    first_drop_time: dict[str, float]
    burst_admitted_fraction: float
    burst_drain_completion_time: Optional[float]
    throughput_per_port: dict[int, float]
    occupancy_mean: float
    occupancy_p99: int
    occupancy_max: int
    partial: bool = False

    @property
    def total_drops(self) -> int:
        return sum(c["dropped"] for c in self.per_queue.values())

    @property
    def total_admitted(self) -> int:
        return sum(c["admitted"] for c in self.per_queue.values())

    @property
    def throughput_total(self) -> float:
        return sum(self.throughput_per_port.values())


def _nearest_rank(values: Sequence[int], quantile: float) -> int:
    ordered = sorted(values)
    idx = max(0, math.ceil(quantile * len(ordered)) - 1)
    return ordered[idx]


def compute(trace: EventTrace, scenario: ScenarioConfig) -> RunMetrics:
    """All run metrics from one trace.

    Burst packets are identified by their source; the drain-completion time
    is the gap between the first burst source's start and the departure of
    the last admitted burst packet (inf, and the partial flag, if the run
    ended first).
    """
    counts = trace.queue_counts()
    burst_ids = {i for i, s in enumerate(scenario.sources) if isinstance(s, Burst)}
    burst_start = min(
        (float(s.start) for s in scenario.sources if isinstance(s, Burst)), default=None
    )

    first_drop: dict[str, float] = {str(q): math.inf for q in trace.queue_ids}
    fifos: dict[QueueId, deque] = {q: deque() for q in trace.queue_ids}
    for q, length in trace.initial_lengths.items():
        fifos[trace._record_queue(q.port, q.class_id)].extend([-1] * length)
    burst_arrivals = 0
    burst_admitted = 0
    burst_in_buffer = 0
    last_burst_departure: Optional[float] = None
    departures_per_port: dict[int, int] = {}

    for time, port, class_id, action, _qlen, _thr, _occ, source_id in trace.records:
        if action == ACTION_SOURCE:
            continue
        q = trace._record_queue(port, class_id)
        if action == ACTION_ADMIT:
            tag = source_id if source_id in burst_ids else -1
            fifos[q].append(tag)
            if tag >= 0:
                burst_arrivals += 1
                burst_admitted += 1
                burst_in_buffer += 1
        elif action == ACTION_DROP:
            if source_id in burst_ids:
                burst_arrivals += 1
            key = str(q)
            if time < first_drop[key]:
                first_drop[key] = time
        elif action == ACTION_DEPART:
            departures_per_port[port] = departures_per_port.get(port, 0) + 1
            tag = fifos[q].popleft()
            if tag >= 0:
                burst_in_buffer -= 1
                last_burst_departure = time

    partial = False
    if burst_start is None:
        fraction = 1.0
        drain_time: Optional[float] = None
    else:
        fraction = burst_admitted / burst_arrivals if burst_arrivals else 1.0
        if burst_admitted == 0:
            drain_time = 0.0
        elif burst_in_buffer > 0:
            drain_time = math.inf
            partial = True
        else:
            drain_time = last_burst_departure - burst_start

    occupancies = [occ for _, occ in trace.samples]
    occ_max = max(
        (rec[6] for rec in trace.records if rec[3] != ACTION_SOURCE),
        default=0,
    )
    occ_max = max(occ_max, sum(trace.initial_lengths.values()))

    per_queue = {
        str(q): {
            **counts[q],
            "initial": trace.initial_lengths.get(q, 0),
            "final": trace.final_lengths.get(q, 0),
        }
        for q in trace.queue_ids
    }
    ports = sorted({q.port for q in trace.queue_ids})
    return RunMetrics(
        per_queue=per_queue,
        first_drop_time=first_drop,
        burst_admitted_fraction=fraction,
        burst_drain_completion_time=drain_time,
        throughput_per_port={
            p: departures_per_port.get(p, 0) / trace.horizon for p in ports
        },
        occupancy_mean=float(np.mean(occupancies)) if occupancies else 0.0,
        occupancy_p99=_nearest_rank(occupancies, 0.99) if occupancies else 0,
        occupancy_max=occ_max,
        partial=partial,
    )


_COMPARED = (
    "total_drops",
    "total_admitted",
    "burst_admitted_fraction",
    "burst_drain_completion_time",
    "throughput_total",
    "occupancy_mean",
    "occupancy_p99",
    "occupancy_max",
)


def compare(
    metric_sets: Mapping[str, RunMetrics], baseline: str
) -> dict[str, dict[str, float]]:
    """Percentage deltas of each labeled run versus the baseline label."""
    if baseline not in metric_sets:
        raise ValueError(f"baseline label {baseline!r} missing from metric sets")
    if len(metric_sets) < 2:
        raise ValueError("need at least two runs to compare")
    base = metric_sets[baseline]
    base_queues = set(base.per_queue)
    for label, m in metric_sets.items():
        if set(m.per_queue) != base_queues:
            raise ValueError(f"axis mismatch: run {label!r} covers different queues")

    out: dict[str, dict[str, float]] = {}
    for label, m in metric_sets.items():
        if label == baseline:
            continue
        deltas: dict[str, float] = {}
        for key in _COMPARED:
            value = getattr(m, key)
            ref = getattr(base, key)
            if value is None or ref is None:
                continue
            if math.isinf(ref) or math.isinf(value):
                deltas[key] = 0.0 if value == ref else math.inf
            elif ref == 0:
                deltas[key] = 0.0 if value == 0 else math.inf
            else:
                deltas[key] = 100.0 * (value - ref) / ref
        out[label] = deltas
    return out


def queue_length_series(trace: EventTrace, queue: QueueId) -> list[tuple[float, int]]:
    """(time, length) step points for one queue, starting at its initial fill."""
    series = [(0.0, trace.initial_lengths.get(queue, 0))]
    for time, port, class_id, action, qlen, *_ in trace.records:
        if action in (ACTION_ADMIT, ACTION_DEPART) and trace._record_queue(port, class_id) == queue:
            series.append((time, qlen))
    return series


def trailing_steady_lengths(
    trace: EventTrace, window: float
) -> tuple[dict[QueueId, int], int]:
    """Pinned steady values over the run's last ``window`` time units.

    Returns per-queue maximum lengths and the maximum total occupancy seen in
    the window.  At a converged fixpoint these are the threshold-pinned
    values (instantaneous lengths dip below them between a service and the
    next refill).
    """
    t0 = trace.horizon - window
    current = {q: trace.initial_lengths.get(q, 0) for q in trace.queue_ids}
    occupancy = sum(current.values())
    maxima: Optional[dict[QueueId, int]] = None
    occ_max = 0
    for time, port, class_id, action, qlen, _thr, occ, _src in trace.records:
        if action not in (ACTION_ADMIT, ACTION_DEPART):
            continue
        if time >= t0 and maxima is None:
            maxima = dict(current)
            occ_max = occupancy
        q = trace._record_queue(port, class_id)
        current[q] = qlen
        occupancy = occ
        if maxima is not None:
            if qlen > maxima[q]:
                maxima[q] = qlen
            if occ > occ_max:
                occ_max = occ
    if maxima is None:
        maxima = dict(current)
        occ_max = occupancy
    return maxima, occ_max


def trailing_group_max(
    trace: EventTrace, queues: Sequence[QueueId], window: float
) -> int:
    """Maximum summed length of a queue group over the run's last ``window``
    time units (e.g. a priority group's pinned aggregate)."""
    group = set(queues)
    t0 = trace.horizon - window
    current = {q: trace.initial_lengths.get(q, 0) for q in trace.queue_ids}
    best: Optional[int] = None
    for time, port, class_id, action, qlen, *_ in trace.records:
        if action not in (ACTION_ADMIT, ACTION_DEPART):
            continue
        if time >= t0 and best is None:
            best = sum(current[q] for q in group)
        current[trace._record_queue(port, class_id)] = qlen
        if best is not None:
            total = sum(current[q] for q in group)
            if total > best:
                best = total
    return best if best is not None else sum(current[q] for q in group)


def to_jsonable(metrics: RunMetrics) -> dict:
    def conv(x):
        if isinstance(x, float) and math.isinf(x):
            return "inf"
        return x

    return {
        "per_queue": metrics.per_queue,
        "first_drop_time": {k: conv(v) for k, v in metrics.first_drop_time.items()},
        "burst_admitted_fraction": metrics.burst_admitted_fraction,
        "burst_drain_completion_time": conv(metrics.burst_drain_completion_time),
        "throughput_per_port": {str(k): v for k, v in metrics.throughput_per_port.items()},
        "throughput_total": metrics.throughput_total,
        "occupancy_mean": metrics.occupancy_mean,
        "occupancy_p99": metrics.occupancy_p99,
        "occupancy_max": metrics.occupancy_max,
        "total_drops": metrics.total_drops,
        "total_admitted": metrics.total_admitted,
        "partial": metrics.partial,
    }
