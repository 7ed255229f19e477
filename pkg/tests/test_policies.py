"""Admission policies: thresholds, decisions, FBA tables."""

import pytest
from fractions import Fraction
from hypothesis import given, strategies as st

from fbsim.core import QueueId, derive_aggregates
from fbsim.policies import (
    AlphaTable,
    Policy,
    PolicyKind,
    admit,
    dt_threshold,
    fb_single_queue_threshold,
    fb_threshold,
    fba_recompute_alphas,
)

LOW, HIGH = 0, 1


def snap(lengths, priorities=None, buffer_size=60, congestion_threshold=0):
    return derive_aggregates(
        lengths, priorities or {0: LOW, 1: HIGH}, buffer_size, congestion_threshold
    )


class TestDtThreshold:
    def test_half_full_unit_alpha(self):
        assert dt_threshold(1, snap({QueueId(0, 0): 30})) == 30

    def test_remaining_ten_alpha_two(self):
        lengths = {QueueId(0, 1): 20, QueueId(1, 0): 10, QueueId(2, 0): 10, QueueId(3, 0): 10}
        assert dt_threshold(2, snap(lengths)) == 20

    def test_full_buffer_gives_zero(self):
        assert dt_threshold(7, snap({QueueId(0, 0): 60})) == 0

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            dt_threshold(0, snap({}))

    @given(st.integers(0, 59), st.integers(1, 59))
    def test_strictly_decreasing_in_occupancy(self, q, delta):
        q2 = min(60, q + delta)
        lo = dt_threshold(1.5, snap({QueueId(0, 0): q}))
        hi = dt_threshold(1.5, snap({QueueId(0, 0): q2}))
        assert hi < lo


class TestFbThreshold:
    def test_lone_high_queue_gets_double_share(self):
        # one congested high queue, buffer at 45 of 60
        s = snap({QueueId(0, 1): 15, QueueId(1, 0): 10, QueueId(2, 0): 10, QueueId(3, 0): 10})
        assert fb_threshold(2, 1, 1.0, s) == 30

    def test_three_low_queues_share_fifteen(self):
        s = snap({QueueId(0, 1): 15, QueueId(1, 0): 10, QueueId(2, 0): 10, QueueId(3, 0): 10})
        assert fb_threshold(1, 3, 1.0, s) == 5

    def test_empty_buffer_reduces_to_alpha_b(self):
        assert fb_threshold(1, 1, 1.0, snap({})) == 60

    def test_degenerates_to_dt_for_lone_full_rate_queue(self):
        s = snap({QueueId(0, 0): 23, QueueId(1, 1): 9})
        for alpha in (0.5, 1, 2, 20):
            assert fb_threshold(alpha, 1, 1.0, s) == dt_threshold(alpha, s)

    def test_counts_must_include_target(self):
        with pytest.raises(ValueError):
            fb_threshold(1, 0, 1.0, snap({}))
        with pytest.raises(ValueError):
            fb_threshold(1, 1, 0.0, snap({}))


class TestFbSingleQueue:
    def test_large_alpha_uncapped_value(self):
        s = snap({QueueId(0, 0): 20, QueueId(1, 0): 10})
        assert fb_single_queue_threshold(20, 2, s) == 300

    def test_small_alpha_empty_buffer(self):
        assert fb_single_queue_threshold(Fraction(1, 2), 1, snap({})) == 30

    def test_full_buffer(self):
        assert fb_single_queue_threshold(20, 1, snap({QueueId(0, 0): 60})) == 0


def _policy(kind, queue_mode="multi", alphas=None):
    by_class = {0: 1.0, 1: 2.0}
    by_class.update(alphas or {})
    return Policy(
        kind=kind,
        alphas=AlphaTable(by_class=by_class),
        class_priorities={0: LOW, 1: HIGH},
        queue_mode=queue_mode,
    )


class TestAdmit:
    def test_complete_sharing_admits_while_space_remains(self):
        p = _policy(PolicyKind.COMPLETE_SHARING)
        s = snap({QueueId(0, 0): 59, QueueId(0, 1): 0})
        assert admit(p, 1, 0, s).admit

    def test_complete_sharing_drops_on_full_buffer(self):
        p = _policy(PolicyKind.COMPLETE_SHARING)
        s = snap({QueueId(0, 0): 60, QueueId(0, 1): 0})
        assert not admit(p, 1, 0, s).admit

    def test_dt_at_threshold_drops(self):
        # queue pinned at its own threshold: 30 = 1 * (60 - 30)
        p = _policy(PolicyKind.DYNAMIC_THRESHOLDS)
        s = snap({QueueId(0, 0): 30, QueueId(0, 1): 0})
        d = admit(p, 0, 0, s)
        assert d.threshold_used == 30 and d.queue_length_at_decision == 30
        assert not d.admit

    def test_fb_below_threshold_admits(self):
        s = snap({QueueId(0, 1): 29, QueueId(1, 0): 8, QueueId(2, 0): 8})
        d = admit(_policy(PolicyKind.FB), 1, 0, s)
        assert d.threshold_used == pytest.approx(2 * (60 - 45))
        assert d.admit

    def test_fb_counts_arriving_queue_when_empty(self):
        # empty high queue arriving: N_high includes it, gamma = 1
        s = snap({QueueId(0, 1): 0, QueueId(1, 0): 10})
        d = admit(_policy(PolicyKind.FB), 1, 0, s)
        assert d.threshold_used == 2 * (60 - 10)

    def test_single_queue_mode_differs_per_class(self):
        # same shared queue, class-specific thresholds
        p = _policy(PolicyKind.FB_SINGLE_QUEUE, queue_mode="single", alphas={0: 0.5, 1: 20.0})
        s = derive_aggregates({QueueId(0, -1): 20}, {-1: -1}, 60)
        low = admit(p, 0, 0, s)
        high = admit(p, 1, 0, s)
        assert not low.admit and low.threshold_used == 0.5 * 40
        assert high.admit and high.threshold_used == 20 * 40

    def test_unknown_class_raises(self):
        with pytest.raises(KeyError):
            admit(_policy(PolicyKind.FB), 9, 0, snap({QueueId(0, 0): 0}))


class TestFba:
    def _snapshot(self):
        # two congested low queues sharing port 1, one congested high on port 0
        return snap({QueueId(0, 1): 10, QueueId(1, 0): 10, QueueId(1, 2): 10, QueueId(0, 0): 0},
                    priorities={0: LOW, 1: HIGH, 2: LOW})

    def test_emitted_alphas_match_fb_factors(self):
        s = self._snapshot()
        base = AlphaTable(by_class={0: 20.0, 1: 2.0, 2: 1.0})
        table = fba_recompute_alphas(s, base, {0: LOW, 1: HIGH, 2: LOW})
        # congested low on shared port: N_p=2, gamma=1/2
        assert table.lookup(2, 1) == 1.0 * (1.0 / 2) * 0.5
        # congested lone high: identity
        assert table.lookup(1, 0) == 2.0
        # empty low queue on port 0: would join N_p=3, gamma shares with high
        assert table.lookup(0, 0) == 20.0 * (1.0 / 3) * 0.5

    def test_example_values(self):
        s = self._snapshot()
        base = AlphaTable(by_class={0: 20.0, 1: 1.0, 2: 1.0})
        table = fba_recompute_alphas(s, base, {0: LOW, 1: HIGH, 2: LOW})
        assert table.lookup(2, 1) == pytest.approx(1 / 2 * 0.5)  # alpha=1, N=2, g=.5
        assert fba_recompute_alphas(
            snap({QueueId(0, 0): 5}), AlphaTable(by_class={0: 0.5, 1: 1.0}), {0: LOW, 1: HIGH}
        ).lookup(0, 0) == 0.5  # N_p=1, gamma=1: identity

    def test_single_queue_mode_returns_base(self):
        base = AlphaTable(by_class={0: 0.5})
        s = derive_aggregates({QueueId(0, -1): 3}, {-1: -1}, 60)
        assert fba_recompute_alphas(s, base, {0: LOW}, queue_mode="single") is base

    def test_fba_table_reproduces_fb_thresholds_exactly(self):
        s = self._snapshot()
        prios = {0: LOW, 1: HIGH, 2: LOW}
        base = AlphaTable(by_class={0: 1.5, 1: 2.0, 2: 1.0})
        table = fba_recompute_alphas(s, base, prios)
        fb = Policy(PolicyKind.FB, base, prios)
        fba = Policy(PolicyKind.FBA, base, prios)
        for q in s.lengths:
            d_fb = admit(fb, q.class_id, q.port, s)
            d_fba = admit(fba, q.class_id, q.port, s, fba_table=table)
            assert d_fb.threshold_used == d_fba.threshold_used  # bitwise
            assert d_fb.admit == d_fba.admit

    def test_fba_without_table_is_continuous_fb(self):
        s = self._snapshot()
        prios = {0: LOW, 1: HIGH, 2: LOW}
        base = AlphaTable(by_class={0: 1.5, 1: 2.0, 2: 1.0})
        fb = Policy(PolicyKind.FB, base, prios)
        fba = Policy(PolicyKind.FBA, base, prios)
        for q in s.lengths:
            assert (
                admit(fb, q.class_id, q.port, s).threshold_used
                == admit(fba, q.class_id, q.port, s).threshold_used
            )


def test_threshold_comparison_is_strict_with_tolerance():
    p = _policy(PolicyKind.DYNAMIC_THRESHOLDS)
    # pinned exactly at threshold: 30 < 1 * (60 - 30) is false
    s = snap({QueueId(0, 0): 30, QueueId(0, 1): 0})
    assert not admit(p, 0, 0, s).admit
    # one packet below: 29 < 1 * (60 - 30) admits
    s2 = snap({QueueId(0, 0): 29, QueueId(0, 1): 1})
    assert admit(p, 0, 0, s2).admit


def test_every_policy_requires_free_buffer():
    full_multi = snap({QueueId(0, 0): 40, QueueId(0, 1): 20})
    for kind in (PolicyKind.DYNAMIC_THRESHOLDS, PolicyKind.FB, PolicyKind.FBA):
        assert not admit(_policy(kind), 1, 0, full_multi).admit
