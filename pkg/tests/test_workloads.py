"""Sources, scenario configs, presets, sweeps, file round-trips."""

from dataclasses import replace
from fractions import Fraction

import pytest

from fbsim.core import QueueId, TrafficClass
from fbsim.engine import run
from fbsim.fluid import CaseKind, classify_case, first_threshold_crossing
from fbsim.policies import PolicyKind
from fbsim.workloads import (
    Burst,
    ConfigError,
    ConstantRate,
    PoissonFlows,
    ScenarioConfig,
    ScenarioParseError,
    build_sources,
    dumps_scenario,
    load_size_cdf,
    loads_scenario,
    preset,
    preset_names,
    steady_omegas,
    sweep,
    transient_scenario,
)

F = Fraction
LOW, HIGH = 0, 1


class TestBuildSources:
    def test_burst_count_is_rate_times_duration(self):
        src = Burst(class_id=0, port=0, r=F(5), duration=F(4), start=F(3))
        arrivals = build_sources([src], seed=1, horizon=100.0)
        assert len(arrivals) == 20
        times = [a[0] for a in arrivals]
        assert times[0] == 3.0
        assert all(3.0 <= t < 7.0 for t in times)

    def test_constant_rate_exact_intervals(self):
        src = ConstantRate(class_id=0, port=0, rate=F(2), start=F(0), stop=F(5))
        times = [a[0] for a in build_sources([src], 1, 100.0)]
        assert times == [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5]

    def test_horizon_clips_open_ended_sources(self):
        src = ConstantRate(class_id=0, port=0, rate=F(1))
        assert len(build_sources([src], 1, 10.0)) == 10

    def test_identical_seeds_identical_schedules(self):
        src = PoissonFlows(class_id=0, port=0, mean_interarrival=F(2))
        a = build_sources([src], seed=9, horizon=200.0)
        b = build_sources([src], seed=9, horizon=200.0)
        assert a == b

    def test_different_seeds_differ(self):
        src = PoissonFlows(class_id=0, port=0, mean_interarrival=F(2))
        assert build_sources([src], 1, 200.0) != build_sources([src], 2, 200.0)

    def test_poisson_respects_stop(self):
        src = PoissonFlows(class_id=0, port=0, mean_interarrival=F(1), stop=F(20))
        assert all(t < 20 for t, *_ in build_sources([src], 3, 100.0))

    def test_constant_rate_queue_stays_short(self):
        # arrivals at the drain rate: the queue never builds up (arrivals tie
        # with services and are processed first, so the instant before each
        # service the length can touch 2, but it is back to <= 1 after)
        cfg = ScenarioConfig(
            buffer_size=60, n_ports=1, classes=(TrafficClass(0, F(1), LOW),),
            policy=PolicyKind.COMPLETE_SHARING,
            sources=(ConstantRate(class_id=0, port=0, rate=F(1)),),
            horizon=50.0,
        )
        trace = run(cfg)
        assert all(occ <= 1 for _, occ in trace.samples)
        assert max(trace.final_lengths.values()) <= 1


class TestSizeCdf:
    def test_load_and_sample(self, tmp_path):
        path = tmp_path / "cdf.txt"
        path.write_text("# size cumprob\n2 0.5\n10 1.0\n")
        cdf = load_size_cdf(path)
        assert cdf == ((2, 0.5), (10, 1.0))

    def test_rejects_non_monotone(self, tmp_path):
        path = tmp_path / "cdf.txt"
        path.write_text("4 0.9\n2 1.0\n")
        with pytest.raises(ScenarioParseError):
            load_size_cdf(path)

    def test_rejects_incomplete(self, tmp_path):
        path = tmp_path / "cdf.txt"
        path.write_text("4 0.9\n")
        with pytest.raises(ScenarioParseError):
            load_size_cdf(path)


class TestPresets:
    def test_all_presets_validate(self):
        for name in preset_names():
            preset(name).validate()

    def test_fig2_shape(self):
        cfg = preset("fig2")
        assert cfg.buffer_size == 60
        assert {c.alpha for c in cfg.classes} == {1, 2}
        assert cfg.initial_lengths[QueueId(0, 0)] == 30

    def test_fig4_incast_shape(self):
        cfg = preset("fig4_incast")
        lows = [q for q, v in cfg.initial_lengths.items() if v == 10]
        assert len(lows) == 5 and all(q.port == 1 for q in lows)
        burst = [s for s in cfg.sources if isinstance(s, Burst)]
        assert len(burst) == 1 and burst[0].r == 5 and burst[0].port == 0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset("nope")


class TestSweep:
    def test_burst_size_fractions(self):
        base = preset("fig4_incast")
        configs = sweep(base, "burst_size", [F(i, 10) for i in range(1, 10)])
        assert len(configs) == 9
        for frac, cfg in zip(range(1, 10), configs):
            burst = [s for s in cfg.sources if isinstance(s, Burst)][0]
            assert burst.r * burst.duration == F(frac, 10) * base.buffer_size
            assert cfg.classes == base.classes and cfg.horizon == base.horizon

    def test_r_axis(self):
        base = preset("fig4_incast")
        cfgs = sweep(base, "r", [2, 8])
        rates = [[s.r for s in c.sources if isinstance(s, Burst)][0] for c in cfgs]
        assert rates == [2, 8]

    def test_load_axis_scales_constant_sources(self):
        base = preset("fig4_steady")
        (cfg,) = sweep(base, "load", [F(1, 2)])
        assert all(
            s.rate == b.rate / 2
            for s, b in zip(cfg.sources, base.sources)
            if isinstance(s, ConstantRate)
        )

    def test_n_low_queues_axis(self):
        base = preset("dt_scaling")
        cfgs = sweep(base, "n_low_queues", [1, 4, 32])
        assert [c.n_ports for c in cfgs] == [2, 5, 33]
        for n, cfg in zip([1, 4, 32], cfgs):
            lows = [s for s in cfg.sources if s.class_id == 0]
            assert len(lows) == n
            assert len({s.port for s in lows}) == n

    def test_empty_values(self):
        assert sweep(preset("fig2"), "load", []) == []

    def test_incompatible_axis(self):
        with pytest.raises(ConfigError):
            sweep(preset("fig4_steady"), "r", [2])
        with pytest.raises(ConfigError):
            sweep(preset("fig2"), "bogus", [1])


class TestConfigFile:
    def test_round_trip_is_identity(self):
        for name in preset_names():
            cfg = preset(name)
            text = dumps_scenario(cfg)
            again = loads_scenario(text)
            assert again == cfg
            assert dumps_scenario(again) == text

    def test_round_trip_with_extras(self):
        cfg = replace(
            preset("fig2"),
            alpha_overrides={QueueId(1, 1): F(3, 2)},
            sources=preset("fig2").sources
            + (PoissonFlows(class_id=0, port=1, mean_interarrival=F(7, 2),
                            size_cdf=((2, 0.5), (8, 1.0))),),
        )
        assert loads_scenario(dumps_scenario(cfg)) == cfg

    def test_parse_error_on_garbage(self):
        with pytest.raises(ScenarioParseError):
            loads_scenario("not a scenario")
        with pytest.raises(ScenarioParseError):
            loads_scenario("[switch]\nbuffer = x\n[classes]\n[policy]\nkind = dt\n")

    def test_bad_alpha_is_a_validation_error(self):
        text = dumps_scenario(preset("fig2")).replace("alpha=1 ", "alpha=0 ")
        with pytest.raises(ConfigError):
            loads_scenario(text)

    def test_validation_catches_bad_references(self):
        cfg = preset("fig2")
        with pytest.raises(ConfigError):
            replace(cfg, sources=(ConstantRate(class_id=9, port=0, rate=F(1)),)).validate()
        with pytest.raises(ConfigError):
            replace(cfg, sources=(ConstantRate(class_id=0, port=7, rate=F(1)),)).validate()
        with pytest.raises(ConfigError):
            replace(cfg, initial_lengths={QueueId(0, 0): 100}).validate()
        with pytest.raises(ConfigError):
            replace(cfg, horizon=5.0).validate()  # source starts at 10


class TestFluidBridges:
    def test_fig4_incast_transient(self):
        ts = transient_scenario(preset("fig4_incast"))
        assert classify_case(ts) is CaseKind.CASE2
        assert first_threshold_crossing(ts) == 2
        assert ts.num_congested_ports == 1

    def test_fig5_incast_transient(self):
        ts = transient_scenario(preset("fig5_incast"))
        assert classify_case(ts) is CaseKind.CASE1
        assert first_threshold_crossing(ts) == F(75, 8)

    def test_fig4_steady_omegas_are_alphas(self):
        omegas = steady_omegas(preset("fig4_steady"))
        assert sorted(omegas.entries.values()) == [1, 1, 1, 2]

    def test_fig5_steady_omegas_scaled(self):
        omegas = steady_omegas(preset("fig5_steady"))
        assert sorted(omegas.entries.values()) == [F(1, 3), F(1, 3), F(1, 3), 2]

    def test_complete_sharing_not_analyzable(self):
        cfg = replace(preset("fig4_steady"), policy=PolicyKind.COMPLETE_SHARING)
        with pytest.raises(ConfigError):
            steady_omegas(cfg)

    def test_burst_required_for_transient(self):
        with pytest.raises(ConfigError):
            transient_scenario(preset("fig4_steady"))
