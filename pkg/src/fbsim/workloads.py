"""Scenario construction: sources, switch configs, presets, sweeps.

A ScenarioConfig fully describes one simulation: buffer size, port/queue
layout, traffic classes with their alphas and priorities, the admission
policy, open-loop sources, and run controls (horizon, seed, sampling).
Configs serialize to a sectioned text file ([switch] / [classes] /
[policy] / [sources], plus optional [initial] and [alpha_overrides]);
parse -> serialize -> parse is the identity.

This module also bridges configs into the fluid model (steady-state omega
vectors and transient scenarios), so the analyzer and the packet engine
consume the same description.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import QueueId, TrafficClass, UnitsConvention
from .fluid import NewQueue, OldQueue, OmegaVector, TransientScenario
from .policies import PolicyKind


class ConfigError(ValueError):
    """Scenario failed validation (CLI exit code 3)."""


class ScenarioParseError(ValueError):
    """Scenario file could not be parsed (CLI exit code 2)."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# sources
# ---------------------------------------------------------------------------

#: Synthetic default flow-size CDF (packets, cumulative probability); replace
#: with an empirical table via load_size_cdf for measured workloads.
DEFAULT_SIZE_CDF: tuple[tuple[int, float], ...] = (
    (1, 0.30), (2, 0.50), (4, 0.65), (8, 0.78),
    (16, 0.87), (32, 0.94), (64, 0.98), (128, 1.0),
)


def load_size_cdf(path) -> tuple[tuple[int, float], ...]:
    """Read an empirical size CDF: two columns (size, cumulative probability)."""
    rows: list[tuple[int, float]] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ScenarioParseError(f"size CDF line needs two columns: {line!r}")
            rows.append((int(parts[0]), float(parts[1])))
    if not rows or abs(rows[-1][1] - 1.0) > 1e-9:
        raise ScenarioParseError("size CDF must end at cumulative probability 1.0")
    for (s0, p0), (s1, p1) in zip(rows, rows[1:]):
        if s1 <= s0 or p1 < p0:
            raise ScenarioParseError("size CDF must be increasing")
    return tuple(rows)


@dataclass(frozen=True)
class ConstantRate:
    """Packets at exact 1/rate intervals from start to stop (None = horizon)."""

    class_id: int
    port: int
    rate: Fraction
    start: Fraction = Fraction(0)
    stop: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "rate", _frac(self.rate))
        object.__setattr__(self, "start", _frac(self.start))
        if self.stop is not None:
            object.__setattr__(self, "stop", _frac(self.stop))
        if self.rate <= 0 or self.start < 0:
            raise ConfigError("constant source needs rate > 0 and start >= 0")


@dataclass(frozen=True)
class Burst:
    """ceil(r * duration) packets at spacing 1/r starting at ``start``.

    An n:1 incast is a single burst of rate n aimed at one queue.
    """

    class_id: int
    port: int
    r: Fraction
    duration: Fraction
    start: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "r", _frac(self.r))
        object.__setattr__(self, "duration", _frac(self.duration))
        object.__setattr__(self, "start", _frac(self.start))
        if self.r <= 0 or self.duration <= 0 or self.start < 0:
            raise ConfigError("burst needs r > 0, duration > 0, start >= 0")


@dataclass(frozen=True)
class PoissonFlows:
    """Flows arriving as a Poisson process; each flow emits its sampled size
    back-to-back at ``flow_rate``.  ``size_cdf`` is None (the shipped
    default), a file path, or an inline ((size, cumprob), ...) table."""

    class_id: int
    port: int
    mean_interarrival: Fraction
    flow_rate: Fraction = Fraction(1)
    start: Fraction = Fraction(0)
    stop: Optional[Fraction] = None
    size_cdf: Union[None, str, tuple[tuple[int, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "mean_interarrival", _frac(self.mean_interarrival))
        object.__setattr__(self, "flow_rate", _frac(self.flow_rate))
        object.__setattr__(self, "start", _frac(self.start))
        if self.stop is not None:
            object.__setattr__(self, "stop", _frac(self.stop))
        if self.mean_interarrival <= 0 or self.flow_rate <= 0 or self.start < 0:
            raise ConfigError("poisson source needs positive interarrival and flow_rate")


SourceSpec = Union[ConstantRate, Burst, PoissonFlows]


def _resolved_cdf(source: PoissonFlows) -> tuple[tuple[int, float], ...]:
    if source.size_cdf is None:
        return DEFAULT_SIZE_CDF
    if isinstance(source.size_cdf, str):
        return load_size_cdf(source.size_cdf)
    return source.size_cdf


def _count_below(limit: Fraction) -> int:
    """Number of integers k >= 0 with k < limit."""
    return max(0, math.ceil(limit))


def build_sources(
    sources: Sequence[SourceSpec], seed: int, horizon: float
) -> list[tuple[float, int, int, int]]:
    """Realize the sources into a deterministic arrival schedule.

    Returns (time, class_id, port, source_index) tuples sorted by time with
    ties broken by source order; identical inputs yield identical schedules.
    """
    hz = Fraction(horizon)
    arrivals: list[tuple[float, int, int, int]] = []
    for idx, src in enumerate(sources):
        if isinstance(src, ConstantRate):
            end = hz if src.stop is None else min(src.stop, hz)
            span = end - src.start
            for k in range(_count_below(span * src.rate)):
                arrivals.append((float(src.start + Fraction(k) / src.rate), src.class_id, src.port, idx))
        elif isinstance(src, Burst):
            end = min(src.start + src.duration, hz)
            span = end - src.start
            for k in range(_count_below(span * src.r)):
                arrivals.append((float(src.start + Fraction(k) / src.r), src.class_id, src.port, idx))
        elif isinstance(src, PoissonFlows):
            rng = np.random.default_rng([seed, idx])
            cdf = _resolved_cdf(src)
            end = float(hz if src.stop is None else min(src.stop, hz))
            t = float(src.start)
            mean = float(src.mean_interarrival)
            spacing = 1.0 / float(src.flow_rate)
            while True:
                t += rng.exponential(mean)
                if t >= end:
                    break
                u = rng.random()
                size = next(s for s, p in cdf if u <= p)
                for j in range(size):
                    pt = t + j * spacing
                    if pt < end:
                        arrivals.append((pt, src.class_id, src.port, idx))
        else:
            raise ConfigError(f"unknown source spec {src!r}")
    arrivals.sort(key=lambda a: (a[0], a[3]))
    return arrivals


def source_spans(
    sources: Sequence[SourceSpec], horizon: float
) -> list[tuple[int, int, int, float, Optional[float]]]:
    """(index, class, port, start, stop) per source; stop None = open-ended."""
    spans = []
    for idx, src in enumerate(sources):
        if isinstance(src, Burst):
            stop: Optional[float] = float(src.start + src.duration)
        else:
            stop = None if src.stop is None else float(src.stop)
        spans.append((idx, src.class_id, src.port, float(src.start), stop))
    return spans


# ---------------------------------------------------------------------------
# scenario configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    buffer_size: int
    n_ports: int
    classes: tuple[TrafficClass, ...]
    policy: PolicyKind
    sources: tuple[SourceSpec, ...] = ()
    horizon: float = 100.0
    queue_mode: str = "multi"
    seed: int = 1
    congestion_threshold: int = 0
    fba_period: float = 1.0
    sample_interval: float = 0.1
    snapshot_staleness: float = 0.0
    initial_lengths: Mapping[QueueId, int] = field(default_factory=dict)
    alpha_overrides: Mapping[QueueId, Fraction] = field(default_factory=dict)

    def class_by_id(self, class_id: int) -> TrafficClass:
        for c in self.classes:
            if c.class_id == class_id:
                return c
        raise ConfigError(f"unknown class {class_id}")

    def alpha_of(self, queue: QueueId) -> Fraction:
        override = self.alpha_overrides.get(queue)
        return override if override is not None else self.class_by_id(queue.class_id).alpha

    def validate(self) -> None:
        try:
            UnitsConvention(self.buffer_size)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_ports < 1:
            raise ConfigError("need at least one port")
        if not self.classes:
            raise ConfigError("need at least one traffic class")
        ids = [c.class_id for c in self.classes]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate class ids")
        if any(i < 0 for i in ids):
            raise ConfigError("class ids must be >= 0")
        if self.queue_mode not in ("multi", "single"):
            raise ConfigError(f"queue_mode must be multi or single, got {self.queue_mode!r}")
        if self.policy is PolicyKind.FB_SINGLE_QUEUE and self.queue_mode != "single":
            raise ConfigError("fb_single policy requires queue_mode = single")
        if self.horizon <= 0:
            raise ConfigError("horizon must be > 0")
        if self.congestion_threshold < 0 or self.fba_period < 0 or self.snapshot_staleness < 0:
            raise ConfigError("congestion_threshold, fba_period, snapshot_staleness must be >= 0")
        if self.sample_interval <= 0:
            raise ConfigError("sample_interval must be > 0")
        known = set(ids)
        for src in self.sources:
            if src.class_id not in known:
                raise ConfigError(f"source references unknown class {src.class_id}")
            if not 0 <= src.port < self.n_ports:
                raise ConfigError(f"source references invalid port {src.port}")
            if float(src.start) >= self.horizon:
                raise ConfigError(f"source start {src.start} at or beyond horizon {self.horizon}")
        total0 = 0
        for q, length in self.initial_lengths.items():
            if q.class_id not in known or not 0 <= q.port < self.n_ports:
                raise ConfigError(f"initial length references unknown queue {q}")
            if length < 0:
                raise ConfigError(f"initial length for {q} must be >= 0")
            total0 += length
        if total0 > self.buffer_size:
            raise ConfigError(
                f"initial lengths sum to {total0} > buffer size {self.buffer_size}"
            )
        for q in self.alpha_overrides:
            if q.class_id not in known or not 0 <= q.port < self.n_ports:
                raise ConfigError(f"alpha override references unknown queue {q}")


# -- text format -------------------------------------------------------------


def _kv(text: str, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for token in text.split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ScenarioParseError(f"{what}: expected key=value, got {token!r}")
        out[key] = value
    return out


def _parse_source(kind_and_args: str) -> SourceSpec:
    parts = kind_and_args.split(None, 1)
    if len(parts) != 2:
        raise ScenarioParseError(f"source needs a kind and arguments: {kind_and_args!r}")
    kind, rest = parts
    kv = _kv(rest, f"source {kind}")
    try:
        return _build_source(kind, kv)
    except ConfigError:
        raise
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise ScenarioParseError(f"bad source {kind_and_args!r}: {exc}") from exc


def _build_source(kind: str, kv: dict[str, str]) -> SourceSpec:
    if kind == "constant":
        return ConstantRate(
            class_id=int(kv["class"]), port=int(kv["port"]), rate=Fraction(kv["rate"]),
            start=Fraction(kv.get("start", "0")),
            stop=None if kv.get("stop", "inf") == "inf" else Fraction(kv["stop"]),
        )
    if kind == "burst":
        return Burst(
            class_id=int(kv["class"]), port=int(kv["port"]), r=Fraction(kv["r"]),
            duration=Fraction(kv["duration"]), start=Fraction(kv.get("start", "0")),
        )
    if kind == "poisson":
        cdf_text = kv.get("cdf", "default")
        if cdf_text == "default":
            cdf: Union[None, str, tuple] = None
        elif ":" in cdf_text:
            cdf = tuple(
                (int(pair.split(":")[0]), float(pair.split(":")[1]))
                for pair in cdf_text.split(",")
            )
        else:
            cdf = cdf_text
        return PoissonFlows(
            class_id=int(kv["class"]), port=int(kv["port"]),
            mean_interarrival=Fraction(kv["mean_interarrival"]),
            flow_rate=Fraction(kv.get("flow_rate", "1")),
            start=Fraction(kv.get("start", "0")),
            stop=None if kv.get("stop", "inf") == "inf" else Fraction(kv["stop"]),
            size_cdf=cdf,
        )
    raise ScenarioParseError(f"unknown source kind {kind!r}")


def _dump_source(src: SourceSpec) -> str:
    if isinstance(src, ConstantRate):
        stop = "inf" if src.stop is None else str(src.stop)
        return f"constant class={src.class_id} port={src.port} rate={src.rate} start={src.start} stop={stop}"
    if isinstance(src, Burst):
        return (
            f"burst class={src.class_id} port={src.port} r={src.r} "
            f"duration={src.duration} start={src.start}"
        )
    stop = "inf" if src.stop is None else str(src.stop)
    if src.size_cdf is None:
        cdf = "default"
    elif isinstance(src.size_cdf, str):
        cdf = src.size_cdf
    else:
        cdf = ",".join(f"{s}:{p}" for s, p in src.size_cdf)
    return (
        f"poisson class={src.class_id} port={src.port} "
        f"mean_interarrival={src.mean_interarrival} flow_rate={src.flow_rate} "
        f"start={src.start} stop={stop} cdf={cdf}"
    )


def loads_scenario(text: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(delimiters=("=",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioParseError(f"bad scenario file: {exc}") from exc
    try:
        sw = parser["switch"]
        classes = []
        for cid, spec in parser["classes"].items():
            kv = _kv(spec, f"class {cid}")
            alpha = Fraction(kv["alpha"])
            if alpha <= 0:
                raise ConfigError(f"class {cid}: alpha must be > 0, got {alpha}")
            classes.append(TrafficClass(int(cid), alpha, int(kv["priority"])))
        classes = tuple(classes)
        pol = parser["policy"]
        sources = tuple(_parse_source(v) for _, v in parser["sources"].items()) if parser.has_section("sources") else ()
        initial = {}
        if parser.has_section("initial"):
            for key, val in parser["initial"].items():
                initial[QueueId.parse(key)] = int(val)
        overrides = {}
        if parser.has_section("alpha_overrides"):
            for key, val in parser["alpha_overrides"].items():
                overrides[QueueId.parse(key)] = Fraction(val)
        return ScenarioConfig(
            buffer_size=int(sw["buffer"]),
            n_ports=int(sw["ports"]),
            classes=classes,
            policy=PolicyKind(pol["kind"]),
            sources=sources,
            horizon=float(sw.get("horizon", "100")),
            queue_mode=sw.get("queue_mode", "multi"),
            seed=int(sw.get("seed", "1")),
            congestion_threshold=int(sw.get("congestion_threshold", "0")),
            fba_period=float(pol.get("fba_period", "1")),
            sample_interval=float(sw.get("sample_interval", "0.1")),
            snapshot_staleness=float(sw.get("snapshot_staleness", "0")),
            initial_lengths=initial,
            alpha_overrides=overrides,
        )
    except (ScenarioParseError, ConfigError):
        raise
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise ScenarioParseError(f"bad scenario file: {exc}") from exc


def dumps_scenario(cfg: ScenarioConfig) -> str:
    out = io.StringIO()
    out.write("[switch]\n")
    out.write(f"buffer = {cfg.buffer_size}\n")
    out.write(f"ports = {cfg.n_ports}\n")
    out.write(f"queue_mode = {cfg.queue_mode}\n")
    out.write(f"congestion_threshold = {cfg.congestion_threshold}\n")
    out.write(f"horizon = {cfg.horizon!r}\n")
    out.write(f"seed = {cfg.seed}\n")
    out.write(f"sample_interval = {cfg.sample_interval!r}\n")
    out.write(f"snapshot_staleness = {cfg.snapshot_staleness!r}\n")
    out.write("\n[classes]\n")
    for c in cfg.classes:
        out.write(f"{c.class_id} = alpha={c.alpha} priority={c.priority_id}\n")
    out.write("\n[policy]\n")
    out.write(f"kind = {cfg.policy.value}\n")
    out.write(f"fba_period = {cfg.fba_period!r}\n")
    out.write("\n[sources]\n")
    for i, src in enumerate(cfg.sources):
        out.write(f"{i} = {_dump_source(src)}\n")
    if cfg.initial_lengths:
        out.write("\n[initial]\n")
        for q in sorted(cfg.initial_lengths):
            out.write(f"{q} = {cfg.initial_lengths[q]}\n")
    if cfg.alpha_overrides:
        out.write("\n[alpha_overrides]\n")
        for q in sorted(cfg.alpha_overrides):
            out.write(f"{q} = {cfg.alpha_overrides[q]}\n")
    return out.getvalue()


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        return loads_scenario(fh.read())


def dump_scenario(cfg: ScenarioConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_scenario(cfg))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

LOW, HIGH = 0, 1  # priority ids used by the presets


def _fig2() -> ScenarioConfig:
    # two queues on separate ports under DT: a lone alpha=1 queue settled at
    # 30 of 60 packets, then a persistent alpha=2 arrival pushes the split
    # to 15/30 with 15 remaining
    return ScenarioConfig(
        buffer_size=60, n_ports=2,
        classes=(TrafficClass(0, Fraction(1), LOW), TrafficClass(1, Fraction(2), HIGH)),
        policy=PolicyKind.DYNAMIC_THRESHOLDS,
        sources=(
            ConstantRate(class_id=0, port=0, rate=Fraction(2)),
            ConstantRate(class_id=1, port=1, rate=Fraction(4), start=Fraction(10)),
        ),
        initial_lengths={QueueId(0, 0): 30},
        horizon=60.0,
    )


def _fig4_steady() -> ScenarioConfig:
    # one alpha=2 queue and three alpha=1 queues, each on its own port, all
    # overloaded: DT settles at lengths 20/10/10/10 with 10 remaining.
    # Source phases are staggered so departures and refills interleave
    # instead of batching (batched phases settle into an offset orbit).
    return ScenarioConfig(
        buffer_size=60, n_ports=4,
        classes=(TrafficClass(0, Fraction(1), LOW), TrafficClass(1, Fraction(2), HIGH)),
        policy=PolicyKind.DYNAMIC_THRESHOLDS,
        sources=(
            ConstantRate(class_id=1, port=0, rate=Fraction(2), start=Fraction(0)),
            ConstantRate(class_id=0, port=1, rate=Fraction(2), start=Fraction(1, 8)),
            ConstantRate(class_id=0, port=2, rate=Fraction(2), start=Fraction(2, 8)),
            ConstantRate(class_id=0, port=3, rate=Fraction(2), start=Fraction(3, 8)),
        ),
        horizon=100.0,
    )


def _incast_layout(policy: PolicyKind, initial_low: int, horizon: float) -> ScenarioConfig:
    # five low classes share port 1 (draining 1/5 each); a 5:1 high-priority
    # incast hits the empty port 0 two time units in
    classes = tuple(TrafficClass(c, Fraction(1), LOW) for c in range(5)) + (
        TrafficClass(5, Fraction(2), HIGH),
    )
    return ScenarioConfig(
        buffer_size=60, n_ports=2, classes=classes, policy=policy,
        sources=tuple(
            ConstantRate(class_id=c, port=1, rate=Fraction(1), start=Fraction(c, 8))
            for c in range(5)
        ) + (Burst(class_id=5, port=0, r=Fraction(5), duration=Fraction(8), start=Fraction(2)),),
        initial_lengths={QueueId(1, c): initial_low for c in range(5)},
        horizon=horizon,
    )


def _fig4_incast() -> ScenarioConfig:
    return _incast_layout(PolicyKind.DYNAMIC_THRESHOLDS, initial_low=10, horizon=20.0)


def _fig5_steady() -> ScenarioConfig:
    return replace(_fig4_steady(), policy=PolicyKind.FB)


def _fig5_incast() -> ScenarioConfig:
    # FB caps each shared-port low queue at 2 packets here, leaving room to
    # absorb the whole 40-packet burst with zero drops (drained by t=42)
    return _incast_layout(PolicyKind.FB, initial_low=2, horizon=50.0)


def _dt_scaling() -> ScenarioConfig:
    # base for the n_low_queues sweep: one high queue, N replicated low queues
    return ScenarioConfig(
        buffer_size=60, n_ports=2,
        classes=(TrafficClass(0, Fraction(1), LOW), TrafficClass(1, Fraction(2), HIGH)),
        policy=PolicyKind.DYNAMIC_THRESHOLDS,
        sources=(
            ConstantRate(class_id=1, port=0, rate=Fraction(2)),
            ConstantRate(class_id=0, port=1, rate=Fraction(2)),
        ),
        horizon=100.0,
    )


_PRESETS = {
    "fig2": _fig2,
    "fig4_steady": _fig4_steady,
    "fig4_incast": _fig4_incast,
    "fig5_steady": _fig5_steady,
    "fig5_incast": _fig5_incast,
    "dt_scaling": _dt_scaling,
}

PRESET_DESCRIPTIONS = {
    "fig2": "two-queue DT transient: settled 30-packet queue meets a persistent 2x-alpha arrival",
    "fig4_steady": "DT steady split across four overloaded single-queue ports (20/10/10/10)",
    "fig4_incast": "DT 5:1 incast into a buffer pre-filled by five shared-port queues",
    "fig5_steady": "FB steady split on the fig4 layout (high queue gets 30, lows 5 each)",
    "fig5_incast": "FB 5:1 incast on the fig4 layout (burst absorbed without drops)",
    "dt_scaling": "base scenario for sweeping the number of low-priority queues",
}


def preset(name: str) -> ScenarioConfig:
    """Named scenario presets for the worked examples."""
    try:
        return _PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(_PRESETS))}")


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_PRESETS))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_AXES = ("load", "burst_size", "n_low_queues", "r")


def sweep(base: ScenarioConfig, axis: str, values: Iterable) -> list[ScenarioConfig]:
    """One config per value, everything but the swept axis fixed.

    load: multiply every constant-rate source's rate.
    burst_size: set each burst's duration so its size is the given fraction
      of the buffer at the burst's rate.
    r: set each burst's rate.
    n_low_queues: replicate the unique lowest-alpha-priority queue (and its
      source) across that many ports.
    """
    out: list[ScenarioConfig] = []
    for value in values:
        if axis == "load":
            v = _frac(value)
            if v <= 0:
                raise ConfigError("load multiplier must be > 0")
            sources = tuple(
                replace(s, rate=s.rate * v) if isinstance(s, ConstantRate) else s
                for s in base.sources
            )
            out.append(replace(base, sources=sources))
        elif axis == "burst_size":
            v = _frac(value)
            if not 0 < v <= 1:
                raise ConfigError("burst_size fraction must be in (0, 1]")
            if not any(isinstance(s, Burst) for s in base.sources):
                raise ConfigError("burst_size axis needs at least one burst source")
            sources = tuple(
                replace(s, duration=v * base.buffer_size / s.r) if isinstance(s, Burst) else s
                for s in base.sources
            )
            out.append(replace(base, sources=sources))
        elif axis == "r":
            v = _frac(value)
            if v <= 0:
                raise ConfigError("burst rate must be > 0")
            if not any(isinstance(s, Burst) for s in base.sources):
                raise ConfigError("r axis needs at least one burst source")
            sources = tuple(
                replace(s, r=v) if isinstance(s, Burst) else s for s in base.sources
            )
            out.append(replace(base, sources=sources))
        elif axis == "n_low_queues":
            out.append(_with_n_low_queues(base, int(value)))
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}; known: {', '.join(SWEEP_AXES)}")
    return out


def _with_n_low_queues(base: ScenarioConfig, n: int) -> ScenarioConfig:
    if n < 1:
        raise ConfigError("n_low_queues must be >= 1")
    groups: dict[int, Fraction] = {}
    for c in base.classes:
        groups[c.priority_id] = max(groups.get(c.priority_id, Fraction(0)), c.alpha)
    low_prio = min(groups, key=lambda p: groups[p])
    low_classes = [c for c in base.classes if c.priority_id == low_prio]
    low_sources = [
        s for s in base.sources
        if isinstance(s, ConstantRate) and any(c.class_id == s.class_id for c in low_classes)
    ]
    if len(low_classes) != 1 or len(low_sources) != 1:
        raise ConfigError(
            "n_low_queues axis needs exactly one low-priority class fed by one constant source"
        )
    template = low_sources[0]
    others = tuple(s for s in base.sources if s is not template)
    other_ports = {s.port for s in others}
    first = max(other_ports) + 1 if other_ports else 0
    replicas = tuple(replace(template, port=first + i) for i in range(n))
    return replace(base, sources=others + replicas, n_ports=first + n)


# ---------------------------------------------------------------------------
# bridges into the fluid model
# ---------------------------------------------------------------------------


def _congested_sets(cfg: ScenarioConfig) -> tuple[list[QueueId], list[QueueId]]:
    """(persistent congested queues, burst target queues) in stable order."""
    new: list[QueueId] = []
    for s in cfg.sources:
        if isinstance(s, Burst):
            q = QueueId(s.port, s.class_id)
            if q not in new:
                new.append(q)
    old: list[QueueId] = []
    for s in cfg.sources:
        if not isinstance(s, Burst):
            q = QueueId(s.port, s.class_id)
            if q not in old and q not in new:
                old.append(q)
    for q in sorted(cfg.initial_lengths):
        if cfg.initial_lengths[q] > 0 and q not in old and q not in new:
            old.append(q)
    return old, new


def _check_analyzable(cfg: ScenarioConfig) -> None:
    if cfg.queue_mode != "multi":
        raise ConfigError("fluid analysis covers the multi-queue mode only")
    if cfg.policy is PolicyKind.COMPLETE_SHARING:
        raise ConfigError("complete sharing has no thresholds to analyze")


def _weights(
    cfg: ScenarioConfig, congested: Sequence[QueueId]
) -> dict[QueueId, Fraction]:
    """omega per queue, treating exactly ``congested`` as congested."""
    dt_like = cfg.policy is PolicyKind.DYNAMIC_THRESHOLDS
    prio_counts: dict[int, int] = {}
    port_counts: dict[int, int] = {}
    for q in congested:
        prio = cfg.class_by_id(q.class_id).priority_id
        prio_counts[prio] = prio_counts.get(prio, 0) + 1
        port_counts[q.port] = port_counts.get(q.port, 0) + 1
    out: dict[QueueId, Fraction] = {}
    for q in congested:
        alpha = cfg.alpha_of(q)
        if dt_like:
            out[q] = alpha
        else:
            prio = cfg.class_by_id(q.class_id).priority_id
            out[q] = alpha * Fraction(1, prio_counts[prio]) * Fraction(1, port_counts[q.port])
    return out


def steady_omegas(cfg: ScenarioConfig, include_bursts: bool = False) -> OmegaVector:
    """Omega vector for the scenario's congested set (FB and FBA use FB
    weights; DT uses the raw alphas)."""
    _check_analyzable(cfg)
    old, new = _congested_sets(cfg)
    congested = old + (new if include_bursts else [])
    if not congested:
        raise ConfigError("no congested queues to analyze (no sources or initial lengths)")
    return OmegaVector(_weights(cfg, congested))


def transient_scenario(cfg: ScenarioConfig) -> TransientScenario:
    """Map the scenario's burst event onto a fluid transient scenario.

    Pre-existing congested queues (constant/poisson targets and pre-filled
    queues) form the old set at their pre-burst weights; burst targets are
    the new queues.  All bursts must share one rate.
    """
    _check_analyzable(cfg)
    bursts = [s for s in cfg.sources if isinstance(s, Burst)]
    if not bursts:
        raise ConfigError("scenario has no burst source to analyze")
    rates = {s.r for s in bursts}
    if len(rates) != 1:
        raise ConfigError("transient analysis needs a single burst rate")
    old_ids, new_ids = _congested_sets(cfg)
    pre = _weights(cfg, old_ids)
    post = _weights(cfg, old_ids + new_ids)
    port_counts: dict[int, int] = {}
    prio_counts: dict[int, int] = {}
    for q in old_ids + new_ids:
        port_counts[q.port] = port_counts.get(q.port, 0) + 1
        prio = cfg.class_by_id(q.class_id).priority_id
        prio_counts[prio] = prio_counts.get(prio, 0) + 1

    fill: dict[QueueId, Fraction] = {}
    for s in cfg.sources:
        if isinstance(s, ConstantRate):
            q = QueueId(s.port, s.class_id)
            fill[q] = fill.get(q, Fraction(0)) + s.rate

    old = tuple(
        OldQueue(
            queue=q,
            omega=post[q],
            gamma=Fraction(1, port_counts[q.port]),
            omega_before=pre[q] if pre[q] != post[q] else None,
            fill_rate=fill.get(q),
        )
        for q in old_ids
    )
    new = tuple(
        NewQueue(
            queue=q,
            omega=post[q],
            gamma=Fraction(1, port_counts[q.port]),
            beta=(
                Fraction(1, prio_counts[cfg.class_by_id(q.class_id).priority_id])
                if cfg.policy is not PolicyKind.DYNAMIC_THRESHOLDS
                else Fraction(1)
            ),
        )
        for q in new_ids
    )
    return TransientScenario(cfg.buffer_size, old, new, bursts[0].r)
