"""Fluid-model analysis of threshold-managed shared buffers.

Everything here works on the weight ``omega = alpha * beta * gamma`` of a
queue, where ``beta`` is the inverse congested-queue count of the queue's
priority group and ``gamma`` its per-port-normalized dequeue rate.  With
``beta = gamma = 1`` (i.e. ``omega = alpha``) the same formulas describe
plain Dynamic Thresholds, so one machinery covers both schemes.

Steady state (all congested queues pinned at their thresholds):

    Q         = B * W / (1 + W)          with W = sum of omegas
    remaining = B / (1 + W)
    T_q       = B * omega_q / (1 + W)

Transient state: previously steady "old" queues meet newly arriving "new"
queues filling at rate ``r``.  Old queues either track their falling
thresholds (Case-1) or drain at full service rate because the thresholds
fall faster than they can empty (Case-2).  ``t1`` is the first time a new
queue meets its own falling threshold -- the first instant a drop becomes
possible -- and ``r * t1`` is the largest burst at rate ``r`` admitted
without loss.

Closed forms are evaluated in exact rational arithmetic; the fixed-step
integrator (the independent numerical cross-check) uses doubles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .core import QueueId

Number = Union[int, float, Fraction]
#: t1 values may be +inf (queue never meets its threshold).
Value = Union[Fraction, float]


class CaseKind(Enum):
    CASE1 = "case1"  # unaffected old queues track their falling thresholds
    CASE2 = "case2"  # thresholds fall faster than old queues can drain


class BoundStatus(Enum):
    UNCONSTRAINED = "unconstrained"
    INFEASIBLE = "infeasible"


UNCONSTRAINED = BoundStatus.UNCONSTRAINED
INFEASIBLE = BoundStatus.INFEASIBLE

Bound = Union[Fraction, BoundStatus]


class WrongCaseError(ValueError):
    """A t1 closed form was applied to a scenario of the other case."""


def _frac(x: Number) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# omega vectors and steady state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OmegaVector:
    """Per-queue weights omega = alpha * beta * gamma."""

    entries: Mapping[QueueId, Fraction]

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    @staticmethod
    def for_dt(alphas: Mapping[QueueId, Number]) -> "OmegaVector":
        """DT is the beta = gamma = 1 special case: omega = alpha."""
        return OmegaVector({q: _frac(a) for q, a in alphas.items()})

    @staticmethod
    def for_fb(
        queues: Mapping[QueueId, tuple[Number, int, Number]],
    ) -> "OmegaVector":
        """Build FB omegas from {queue: (alpha, priority_id, gamma)}.

        All listed queues are taken as congested, so beta for a priority is
        1 / (number of listed queues of that priority).
        """
        counts: dict[int, int] = {}
        for _, prio, _ in queues.values():
            counts[prio] = counts.get(prio, 0) + 1
        return OmegaVector(
            {
                q: _frac(alpha) * Fraction(1, counts[prio]) * _frac(gamma)
                for q, (alpha, prio, gamma) in queues.items()
            }
        )


@dataclass(frozen=True)
class AnalysisResult:
    """Closed-form outputs; transient fields are None for steady-only runs."""

    steady_occupancy: Fraction
    steady_remaining: Fraction
    steady_thresholds: Mapping[QueueId, Fraction]
    case: Optional[CaseKind] = None
    t1: Optional[Value] = None
    t1_per_queue: Optional[Mapping[QueueId, Value]] = None
    burst_tolerance: Optional[Value] = None
    feasible: bool = True


def steady_state(omegas: OmegaVector, buffer_size: Number) -> AnalysisResult:
    """Steady-state occupancy, remaining space and per-queue thresholds."""
    if any(w <= 0 for w in omegas.entries.values()):
        raise ValueError("all omegas must be > 0 for congested queues")
    b = _frac(buffer_size)
    w_total = omegas.total()
    share = b / (1 + w_total)
    return AnalysisResult(
        steady_occupancy=b * w_total / (1 + w_total),
        steady_remaining=share,
        steady_thresholds={q: w * share for q, w in omegas.entries.items()},
    )


def occupancy_bound(priority_alpha_maxes: Sequence[Number], buffer_size: Number) -> Fraction:
    """Upper bound on total occupancy from the per-priority alpha maxima.

    Each priority group's omegas sum to at most its largest alpha, so
    occupancy never exceeds B * sum(alpha_max) / (1 + sum(alpha_max))
    regardless of how many queues are congested.
    """
    if not priority_alpha_maxes:
        raise ValueError("need at least one priority alpha")
    total = sum((_frac(a) for a in priority_alpha_maxes), Fraction(0))
    if total <= 0:
        raise ValueError("alpha maxima must be > 0")
    return _frac(buffer_size) * total / (1 + total)


# ---------------------------------------------------------------------------
# transient scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OldQueue:
    """A pre-existing congested queue.

    ``omega`` is the weight during the transient; ``omega_before`` the weight
    in the preceding steady state (defaults to ``omega``; a smaller pre/post
    difference marks the queue as omega-affected, i.e. a member of G_e).
    ``fill_rate`` is the queue's own arrival rate for the integrator; None
    means fully backlogged (it can always refill up to its threshold).
    """

    queue: QueueId
    omega: Fraction
    gamma: Fraction
    omega_before: Optional[Fraction] = None
    fill_rate: Optional[Fraction] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _frac(self.omega))
        object.__setattr__(self, "gamma", _frac(self.gamma))
        if self.omega_before is not None:
            object.__setattr__(self, "omega_before", _frac(self.omega_before))
        if self.omega <= 0 or not 0 < self.gamma <= 1:
            raise ValueError(f"{self.queue}: need omega > 0 and gamma in (0,1]")

    @property
    def pre_omega(self) -> Fraction:
        return self.omega if self.omega_before is None else self.omega_before

    @property
    def affected(self) -> bool:
        """True when the new queues changed this queue's omega (G_e member)."""
        return self.omega_before is not None and self.omega_before != self.omega


@dataclass(frozen=True)
class NewQueue:
    """A newly arriving queue (empty at t = 0, filling at the burst rate).

    ``beta`` is the queue's priority-share factor 1/N_p, kept separate from
    ``omega`` so alpha bounds can be solved for (omega = alpha * beta * gamma).
    """

    queue: QueueId
    omega: Fraction
    gamma: Fraction
    beta: Fraction = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", _frac(self.omega))
        object.__setattr__(self, "gamma", _frac(self.gamma))
        object.__setattr__(self, "beta", _frac(self.beta))
        if self.omega <= 0 or not 0 < self.gamma <= 1 or not 0 < self.beta <= 1:
            raise ValueError(f"{self.queue}: need omega > 0, gamma and beta in (0,1]")


@dataclass(frozen=True)
class TransientScenario:
    """Old/new queue sets plus the per-new-queue arrival rate ``r``."""

    buffer_size: int
    old: tuple[OldQueue, ...]
    new: tuple[NewQueue, ...]
    r: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", _frac(self.r))
        if self.buffer_size < 1:
            raise ValueError("buffer_size must be >= 1")
        if self.r <= 0:
            raise ValueError("arrival rate r must be > 0")
        seen = set()
        for entry in (*self.old, *self.new):
            if entry.queue in seen:
                raise ValueError(f"duplicate queue {entry.queue}")
            seen.add(entry.queue)

    @property
    def g_e(self) -> tuple[OldQueue, ...]:
        return tuple(q for q in self.old if q.affected)

    @property
    def g_ne(self) -> tuple[OldQueue, ...]:
        return tuple(q for q in self.old if not q.affected)

    @property
    def num_congested_ports(self) -> Fraction:
        """NUM: the old queues' total drain, which sums to the congested
        port count when every congested port's queues are all in S_old."""
        return sum((q.gamma for q in self.old), Fraction(0))

    # sum shorthands used by the closed forms
    def _w_old_pre(self) -> Fraction:
        return sum((q.pre_omega for q in self.old), Fraction(0))

    def _w_ne(self) -> Fraction:
        return sum((q.omega for q in self.g_ne), Fraction(0))

    def _fill_total(self) -> Fraction:
        return sum((self.r - q.gamma for q in self.new), Fraction(0))


def two_priority_incast(
    buffer_size: Number,
    alpha_low: Number,
    alpha_high: Number,
    r: Number,
    n_low_ports: int = 1,
    low_queues_per_port: int = 1,
    n_new: int = 1,
    scheme: str = "fb",
    new_gamma: Number = 1,
    low_class: int = 0,
    high_class: int = 1,
) -> TransientScenario:
    """Canonical burst scenario: low-priority queues congested, a high burst
    arrives on empty ports.

    Low queues occupy ``n_low_ports`` ports with ``low_queues_per_port``
    queues each (gamma = 1/m); the ``n_new`` new queues land on otherwise
    empty ports (gamma = ``new_gamma``) and form their own priority group.
    ``scheme`` selects FB weights (alpha * beta * gamma) or DT weights
    (omega = alpha).
    """
    a_low, a_high, rf = _frac(alpha_low), _frac(alpha_high), _frac(r)
    m = low_queues_per_port
    n_low = n_low_ports * m
    gamma_low = Fraction(1, m)
    old = []
    for i in range(n_low):
        port = 100 + i // m
        if scheme == "fb":
            omega = a_low * Fraction(1, n_low) * gamma_low
        elif scheme == "dt":
            omega = a_low
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        # queues sharing a port carry distinct class ids (one queue per
        # (port, class) pair)
        old.append(OldQueue(QueueId(port, low_class + i % m), omega=omega, gamma=gamma_low))
    beta_new = Fraction(1, n_new) if scheme == "fb" else Fraction(1)
    g_new = _frac(new_gamma)
    new = [
        NewQueue(
            QueueId(i, high_class),
            omega=a_high * beta_new * g_new if scheme == "fb" else a_high,
            gamma=g_new,
            beta=beta_new,
        )
        for i in range(n_new)
    ]
    return TransientScenario(int(buffer_size), tuple(old), tuple(new), rf)


# ---------------------------------------------------------------------------
# case classification and t1 closed forms
# ---------------------------------------------------------------------------


def case_rate_bound(ts: TransientScenario) -> Value:
    """The arrival rate at or below which unaffected old queues can track
    their thresholds (Case-1).  +inf when there are no old queues.

    The second term sums over G_ne, or over G_e when G_ne is empty.
    """
    if not ts.new:
        raise ValueError("scenario has no new queues, nothing transient to classify")
    if not ts.old:
        return math.inf
    n_new = len(ts.new)
    first = (sum((q.gamma for q in ts.new), Fraction(0)) + sum((q.gamma for q in ts.g_e), Fraction(0))) / n_new
    starred = ts.g_ne if ts.g_ne else ts.g_e
    g_star = sum((q.gamma for q in starred), Fraction(0))
    w_star = sum((q.omega for q in starred), Fraction(0))
    w_ne = ts._w_ne()
    return first + g_star * (1 + w_ne) / (w_star * n_new)


def classify_case(ts: TransientScenario) -> CaseKind:
    """Case-1 when r is at or below the tracking bound, Case-2 above.

    With no old queues at all, the scenario is Case-1 by definition (the
    new queues simply fill toward their thresholds).  The aggregate bound
    assumes the unaffected old queues share one gamma/omega ratio, which
    holds for all the symmetric scenarios built here.
    """
    return CaseKind.CASE1 if ts.r <= case_rate_bound(ts) else CaseKind.CASE2


def t1_case1(ts: TransientScenario) -> dict[QueueId, Value]:
    """Case-1 first threshold crossing per new queue.

    t1 = omega*B*(1+W_ne) / ((1+W_old) * ((r-gamma)*(1+W_ne) + omega*(F - G_e_drain)))

    where W_ne sums unaffected old omegas, W_old the pre-transient old
    omegas, F the new queues' total net fill and G_e_drain the affected old
    queues' total drain.  With G_e empty this is
    omega*B / ((r-gamma) * (1 + W_old + omega*|S_new|)) for symmetric new
    queues.  +inf when the queue never grows (r <= gamma).
    """
    if classify_case(ts) is CaseKind.CASE2:
        raise WrongCaseError("scenario is Case-2; use t1_case2")
    w_old = ts._w_old_pre()
    w_ne = ts._w_ne()
    drain_e = sum((q.gamma for q in ts.g_e), Fraction(0))
    fill = ts._fill_total()
    out: dict[QueueId, Value] = {}
    for q in ts.new:
        denom = (ts.r - q.gamma) * (1 + w_ne) + q.omega * (fill - drain_e)
        if denom <= 0:
            out[q.queue] = math.inf
        else:
            out[q.queue] = q.omega * ts.buffer_size * (1 + w_ne) / ((1 + w_old) * denom)
    return out


def t1_case2(ts: TransientScenario) -> dict[QueueId, Value]:
    """Case-2 first threshold crossing per new queue.

    t1 = omega*B / ((1+W_old) * ((r-gamma) + omega*(F - NUM)))

    where NUM is the old queues' total drain (their congested port count).
    Raising NUM only raises t1.  Accepts scenarios at the exact case
    boundary so continuity with t1_case1 can be checked.
    """
    if ts.old and ts.r < case_rate_bound(ts):
        raise WrongCaseError("scenario is strictly Case-1; use t1_case1")
    w_old = ts._w_old_pre()
    num = ts.num_congested_ports
    fill = ts._fill_total()
    out: dict[QueueId, Value] = {}
    for q in ts.new:
        denom = (ts.r - q.gamma) + q.omega * (fill - num)
        if denom <= 0:
            out[q.queue] = math.inf
        else:
            out[q.queue] = q.omega * ts.buffer_size / ((1 + w_old) * denom)
    return out


def first_threshold_crossing(ts: TransientScenario) -> Value:
    """Earliest t1 over the new queues, using the scenario's case."""
    values = (t1_case1 if classify_case(ts) is CaseKind.CASE1 else t1_case2)(ts)
    return min(values.values())


def burst_tolerance(ts: TransientScenario) -> Value:
    """Largest burst at rate r admitted without drops: r * t1 (+inf propagates)."""
    t1 = first_threshold_crossing(ts)
    return math.inf if t1 == math.inf else ts.r * t1


def analyze_transient(ts: TransientScenario) -> AnalysisResult:
    """Full closed-form analysis: eventual steady state, case, t1, tolerance."""
    omegas = OmegaVector(
        {**{q.queue: q.omega for q in ts.old}, **{q.queue: q.omega for q in ts.new}}
    )
    steady = steady_state(omegas, ts.buffer_size)
    case = classify_case(ts)
    per_queue = (t1_case1 if case is CaseKind.CASE1 else t1_case2)(ts)
    t1 = min(per_queue.values())
    return replace(
        steady,
        case=case,
        t1=t1,
        t1_per_queue=per_queue,
        burst_tolerance=math.inf if t1 == math.inf else ts.r * t1,
        feasible=True,
    )


# ---------------------------------------------------------------------------
# alpha configuration bounds
# ---------------------------------------------------------------------------


def alpha_L_for_zero_transient(r: Number, num_congested_ports: int = 1) -> Bound:
    """Largest low-priority alpha guaranteeing zero transient losses for a
    burst of rate r, given at least ``num_congested_ports`` congested ports:
    alpha_L <= 1 / (r - (NUM + 1)).  Unconstrained when r <= NUM + 1.
    """
    rf = _frac(r)
    if rf <= 0:
        raise ValueError("r must be > 0")
    if num_congested_ports < 1:
        raise ValueError("NUM must be >= 1")
    denom = rf - (num_congested_ports + 1)
    if denom <= 0:
        return UNCONSTRAINED
    return 1 / denom


def alpha_L_for_burst(buffer_size: Number, r: Number, t: Number) -> Bound:
    """Largest low-priority alpha allowing a worst-case (r, t) burst through:
    alpha_L <= B / ((r-2)*t) - 1.  Unconstrained for r <= 2; infeasible when
    the bound is not positive."""
    b, rf, tf = _frac(buffer_size), _frac(r), _frac(t)
    if b <= 0 or tf <= 0:
        raise ValueError("need B > 0 and t > 0")
    if rf <= 2:
        return UNCONSTRAINED
    bound = b / ((rf - 2) * tf) - 1
    return bound if bound > 0 else INFEASIBLE


def alpha_H_for_burst(buffer_size: Number, r: Number, t: Number, alpha_L: Number) -> Bound:
    """Smallest high-priority alpha (strict lower bound) absorbing a
    worst-case (r, t) burst given alpha_L:

        alpha_H > 1 / (B / ((r-1)*t*(1+alpha_L)) - (r-2)/(r-1))

    Infeasible when the inner denominator is not positive (no alpha_H works).
    """
    b, rf, tf, al = _frac(buffer_size), _frac(r), _frac(t), _frac(alpha_L)
    if rf <= 1:
        raise ValueError("r must exceed the port drain rate (r > 1)")
    if tf <= 0 or al < 0:
        raise ValueError("need t > 0 and alpha_L >= 0")
    inner = b / ((rf - 1) * tf * (1 + al)) - (rf - 2) / (rf - 1)
    if inner <= 0:
        return INFEASIBLE
    return 1 / inner


def multi_priority_alpha_H(
    lower_priority_alpha_maxes: Sequence[Number],
    buffer_size: Number,
    r: Number,
    t: Number,
) -> Bound:
    """Highest-priority alpha bound with several lower priorities: their
    alpha maxima simply sum into the alpha_L slot."""
    if not lower_priority_alpha_maxes:
        raise ValueError("need at least one lower-priority alpha")
    alpha_x = sum((_frac(a) for a in lower_priority_alpha_maxes), Fraction(0))
    return alpha_H_for_burst(buffer_size, r, t, alpha_x)


@dataclass(frozen=True)
class GeneralAlphaBounds:
    """Scenario-shaped alpha bounds.

    ``alpha_L_case_bound`` is the low-priority weight sum at the Case-1/
    Case-2 boundary (the scenario stays Case-1 at or below it -- relation
    '<=' -- and is Case-2 above it -- relation '>').
    ``alpha_L_max_for_burst`` is the feasibility frontier as alpha_H grows
    without bound (the duration-aware alpha_L limit).
    ``alpha_H_min`` inverts t <= t1 for the scenario's case.
    """

    case: CaseKind
    alpha_L_case_bound: Bound
    alpha_L_relation: str
    alpha_L_max_for_burst: Bound
    alpha_H_min: Bound


def alpha_bounds_general(ts: TransientScenario, t: Number) -> GeneralAlphaBounds:
    """Generalized alpha bounds for an arbitrary transient scenario.

    On the canonical worst case (one congested low port, one new queue with
    gamma = beta = 1, Case-2 rate) these reduce exactly to the two-priority
    closed forms of alpha_L_for_burst / alpha_H_for_burst.
    """
    tf = _frac(t)
    if tf <= 0:
        raise ValueError("t must be > 0")
    case = classify_case(ts)
    n_new = len(ts.new)

    # case-boundary alpha_L: invert the rate bound for the starred omega sum
    if not ts.old:
        boundary: Bound = UNCONSTRAINED
    else:
        starred = ts.g_ne if ts.g_ne else ts.g_e
        g_star = sum((q.gamma for q in starred), Fraction(0))
        inner = (n_new / g_star) * (
            ts.r
            - (
                sum((q.gamma for q in ts.new), Fraction(0))
                + sum((q.gamma for q in ts.g_e), Fraction(0))
            )
            / n_new
        ) - (1 if ts.g_ne else 0)
        boundary = 1 / inner if inner > 0 else UNCONSTRAINED

    w_old = ts._w_old_pre()
    w_ne = ts._w_ne()
    fill = ts._fill_total()
    target = ts.new[0]
    share = target.beta * target.gamma  # omega = alpha_H * share

    if case is CaseKind.CASE1:
        drain_e = sum((q.gamma for q in ts.g_e), Fraction(0))
        denom = ts.buffer_size * (1 + w_ne) - tf * (1 + w_old) * (fill - drain_e)
        frontier: Bound = UNCONSTRAINED if denom > 0 else INFEASIBLE
        if denom <= 0:
            alpha_h: Bound = INFEASIBLE
        else:
            alpha_h = (tf * (ts.r - target.gamma) * (1 + w_old) * (1 + w_ne) / denom) / share
    else:
        num = ts.num_congested_ports
        drift = fill - num
        if drift <= 0:
            frontier = UNCONSTRAINED
        else:
            limit = ts.buffer_size / (tf * drift) - 1
            frontier = limit if limit > 0 else INFEASIBLE
        denom = ts.buffer_size - tf * (1 + w_old) * drift
        if denom <= 0:
            alpha_h = INFEASIBLE
        else:
            alpha_h = (tf * (ts.r - target.gamma) * (1 + w_old) / denom) / share

    return GeneralAlphaBounds(
        case=case,
        alpha_L_case_bound=boundary,
        alpha_L_relation="<=" if case is CaseKind.CASE1 else ">",
        alpha_L_max_for_burst=frontier,
        alpha_H_min=alpha_h,
    )


# ---------------------------------------------------------------------------
# fixed-step integrator (independent numerical oracle)
# ---------------------------------------------------------------------------


@dataclass
class TransientTrajectories:
    times: list[float]
    lengths: dict[QueueId, list[float]]
    thresholds: dict[QueueId, list[float]]
    first_crossing: dict[QueueId, float]
    step: float
    warnings: tuple[str, ...] = ()


def _solve_total_rate(base: float, tracked: list[tuple[float, float, float]]) -> float:
    """Solve S = base + sum_i clamp(-omega_i*S, lo_i, hi_i).

    The right side is piecewise linear and non-increasing in S, so the root
    is unique; walk the clamp breakpoints to find the containing segment.
    """
    if not tracked:
        return base

    def rhs(s: float) -> float:
        acc = base
        for omega, lo, hi in tracked:
            v = -omega * s
            acc += lo if v < lo else (hi if v > hi else v)
        return acc

    points: list[float] = []
    for omega, lo, hi in tracked:
        points.append(-lo / omega)
        if math.isfinite(hi):
            points.append(-hi / omega)
    points.sort()
    lower = None  # largest breakpoint with rhs(p) >= p
    upper = None  # smallest breakpoint with rhs(p) <= p
    for p in points:
        if rhs(p) >= p:
            lower = p
        else:
            upper = p
            break
    if lower is None:
        # root lies below every breakpoint: all contributions at hi (finite
        # ones) plus linear parts of unbounded ones
        probe = points[0] - 1.0 if points else 0.0
    elif upper is None:
        probe = points[-1] + 1.0
    else:
        probe = 0.5 * (lower + upper)
    const = base
    slope_w = 0.0
    for omega, lo, hi in tracked:
        v = -omega * probe
        if v < lo:
            const += lo
        elif v > hi:
            const += hi
        else:
            slope_w += omega
    return const / (1.0 + slope_w)


def integrate_transient(
    ts: TransientScenario,
    horizon: Optional[float] = None,
    step: Optional[float] = None,
    record: bool = True,
) -> TransientTrajectories:
    """Explicit fixed-step integration of the threshold/queue dynamics.

    Thresholds are evaluated directly as ``omega * (B - Q_total)`` each step
    (equivalently dT/dt = -omega * sum dQ/dt).  Per step every queue is in
    one of three regimes: above its threshold it drains at gamma; at its
    threshold it tracks the threshold's rate clamped to [-gamma, fill-gamma];
    below it, new queues fill at r - gamma and backlogged old queues snap up
    to the threshold.  Crossing times of new queues are refined by linear
    interpolation inside the step.
    """
    b = float(ts.buffer_size)
    if step is None:
        step = ts.buffer_size / 1e4
    if step <= 0:
        raise ValueError("step must be > 0")
    band = 1e-9 * b

    entries = list(ts.old) + list(ts.new)
    n_old = len(ts.old)
    omega = [float(q.omega) for q in entries]
    gamma = [float(q.gamma) for q in entries]
    fill_cap: list[float] = []
    for q in ts.old:
        cap = math.inf if q.fill_rate is None else float(q.fill_rate - q.gamma)
        fill_cap.append(cap)
    for q in ts.new:
        fill_cap.append(float(ts.r - q.gamma))

    w_pre = float(ts._w_old_pre())
    lengths = [float(q.pre_omega) * b / (1.0 + w_pre) for q in ts.old] + [0.0] * len(ts.new)

    if horizon is None:
        fills = [float(ts.r - q.gamma) for q in ts.new]
        best = max(fills) if fills else 0.0
        horizon = 1.1 * b / best + 20 * step if best > 0 else 50 * step

    crossing: dict[QueueId, float] = {q.queue: math.inf for q in ts.new}
    crossed = [False] * len(entries)
    times: list[float] = []
    traj_q: list[list[float]] = [[] for _ in entries]
    traj_t: list[list[float]] = [[] for _ in entries]

    t = 0.0
    pending = len(ts.new)
    while t < horizon - 1e-15:
        total = sum(lengths)
        remaining = b - total
        thr = [omega[i] * remaining for i in range(len(entries))]

        if record:
            times.append(t)
            for i in range(len(entries)):
                traj_q[i].append(lengths[i])
                traj_t[i].append(thr[i])

        regimes: list[int] = []  # 0=drain, 1=track, 2=fill
        for i in range(len(entries)):
            gap = lengths[i] - thr[i]
            if gap > band:
                regimes.append(0)
            elif gap < -band:
                if i < n_old and math.isinf(fill_cap[i]):
                    lengths[i] = thr[i]  # backlogged: instant refill
                    regimes.append(1)
                else:
                    regimes.append(2)
            else:
                regimes.append(1)

        base = 0.0
        tracked: list[tuple[float, float, float]] = []
        for i, regime in enumerate(regimes):
            if regime == 0:
                base += -gamma[i]
            elif regime == 2:
                base += fill_cap[i]
            else:
                tracked.append((omega[i], -gamma[i], fill_cap[i]))
        s_total = _solve_total_rate(base, tracked)

        rates = [0.0] * len(entries)
        for i, regime in enumerate(regimes):
            if regime == 0:
                rates[i] = -gamma[i]
            elif regime == 2:
                rates[i] = fill_cap[i]
            else:
                v = -omega[i] * s_total
                lo, hi = -gamma[i], fill_cap[i]
                rates[i] = lo if v < lo else (hi if v > hi else v)

        h = min(step, horizon - t)
        d_thr = -s_total  # d(remaining)/dt; dT_i/dt = omega_i * d_thr
        for i in range(n_old, len(entries)):
            if crossed[i - n_old] or regimes[i] != 2:
                continue
            q_next = lengths[i] + rates[i] * h
            t_next = thr[i] + omega[i] * d_thr * h
            if q_next >= t_next - band:
                rel = rates[i] - omega[i] * d_thr
                dt_hit = (thr[i] - lengths[i]) / rel if rel > 0 else h
                crossing[entries[i].queue] = t + min(max(dt_hit, 0.0), h)
                crossed[i - n_old] = True
                pending -= 1

        for i in range(len(entries)):
            lengths[i] += rates[i] * h
        t += h

        if pending == 0 and not record:
            break

    warnings: tuple[str, ...] = ()
    finite = [v for v in crossing.values() if math.isfinite(v)]
    if finite and min(finite) < 5 * step:
        warnings = (
            f"step {step} is coarse relative to the earliest crossing "
            f"{min(finite):.6g}; halve the step to resolve it",
        )

    return TransientTrajectories(
        times=times,
        lengths={entries[i].queue: traj_q[i] for i in range(len(entries))},
        thresholds={entries[i].queue: traj_t[i] for i in range(len(entries))},
        first_crossing=crossing,
        step=step,
        warnings=warnings,
    )


def integrate_first_crossing(
    ts: TransientScenario,
    step: Optional[float] = None,
    rel_tol: float = 1e-3,
    max_halvings: int = 6,
) -> tuple[float, float]:
    """Earliest crossing time from the integrator, halving the step until the
    estimate moves by less than ``rel_tol``.  Returns (t1, step used).

    When no step is given, a coarse pass (step = B/200) locates the crossing
    first and the refinement step is scaled to that rough estimate, so the
    work per scenario is independent of how far out the crossing lies.
    """
    if step is None:
        coarse = integrate_transient(ts, step=ts.buffer_size / 200, record=False)
        rough = min(coarse.first_crossing.values())
        if not math.isfinite(rough):
            return rough, coarse.step
        s = rough / 400
    else:
        s = step
    prev = None
    for _ in range(max_halvings + 1):
        result = integrate_transient(ts, step=s, record=False)
        t1 = min(result.first_crossing.values())
        if not math.isfinite(t1):
            return t1, s
        if prev is not None and abs(t1 - prev) <= rel_tol * t1:
            return t1, s
        prev = t1
        s *= 0.5
    return prev if prev is not None else math.inf, s * 2


# ---------------------------------------------------------------------------
# burst-absorption curves
# ---------------------------------------------------------------------------

CURVE_COLUMNS = ("scheme", "r", "n_low_queues", "case", "t1", "burst_tolerance")


@dataclass(frozen=True)
class CurvePoint:
    scheme: str
    r: Fraction
    n_low_queues: int
    case: CaseKind
    t1: Value
    burst: Value


def burst_absorption_curve(
    buffer_size: Number,
    alpha_low: Number,
    alpha_high: Number,
    r_values: Iterable[Number],
    low_queue_counts: Iterable[int],
    scheme: str = "fb",
) -> list[CurvePoint]:
    """Burst tolerance over (rate, pre-occupied low-queue count) grids.

    Each point classifies the scenario's case and evaluates r * t1.  Under
    FB the single-low-queue state is the pointwise lower bound of the
    family; under DT the family is unbounded in both directions.
    """
    points: list[CurvePoint] = []
    for count in low_queue_counts:
        if count < 1:
            raise ValueError("low-queue count must be >= 1")
        for r in r_values:
            ts = two_priority_incast(
                buffer_size, alpha_low, alpha_high, r, n_low_ports=count, scheme=scheme
            )
            case = classify_case(ts)
            t1 = first_threshold_crossing(ts)
            points.append(
                CurvePoint(
                    scheme=scheme,
                    r=_frac(r),
                    n_low_queues=count,
                    case=case,
                    t1=t1,
                    burst=math.inf if t1 == math.inf else _frac(r) * t1,
                )
            )
    return points


def curve_to_csv(points: Sequence[CurvePoint], path) -> None:
    """Write curve points as CSV with the documented header row."""

    def fmt(value: Value) -> str:
        return "inf" if value == math.inf else repr(float(value))

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for p in points:
            writer.writerow(
                [p.scheme, repr(float(p.r)), p.n_low_queues, p.case.value, fmt(p.t1), fmt(p.burst)]
            )
