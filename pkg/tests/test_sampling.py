"""Sampling gate behavior and its interaction with profile counters."""

import pytest

from redload.engine import AnalysisConfig, analyze_events
from redload.errors import ConfigError
from redload.sampling import SamplingConfig, is_monitored
from redload.workloads import Scenario, generate


def test_disabled_sampling_monitors_everything():
    cfg = SamplingConfig.disabled()
    assert all(is_monitored(i, cfg) for i in range(0, 10_000, 97))


def test_small_window_pattern():
    cfg = SamplingConfig(window_enable=2, window_disable=3)
    got = [is_monitored(i, cfg) for i in range(10)]
    assert got == [True, True, False, False, False,
                   True, True, False, False, False]


def test_default_window_boundary():
    cfg = SamplingConfig()
    assert is_monitored(999_999, cfg)
    assert not is_monitored(1_000_000, cfg)
    assert not is_monitored(99_999_999, cfg)
    assert is_monitored(100_000_000, cfg)


def test_window_enable_must_be_positive():
    with pytest.raises(ConfigError):
        SamplingConfig(window_enable=0)
    SamplingConfig(window_enable=0, enabled=False)


def test_long_run_monitored_fraction_converges():
    cfg = SamplingConfig(window_enable=3, window_disable=17)
    n = 200_000
    monitored = sum(1 for i in range(n) if is_monitored(i, cfg))
    assert monitored / n == pytest.approx(3 / 20, abs=1e-4)


def _counter_values(profile):
    vals = [profile.totals.total_nonfp_bytes, profile.totals.total_fp_bytes,
            profile.totals.redundant_nonfp_bytes,
            profile.totals.redundant_fp_bytes]
    for rows in (profile.temporal_pairs, profile.objects,
                 profile.spatial_pairs):
        for key in sorted(rows, key=repr):
            c = rows[key]
            vals.extend([c.redundant_bytes_precise, c.redundant_bytes_approx,
                         c.total_bytes_precise, c.total_bytes_approx,
                         c.redundant_instances, c.total_instances])
    return vals


def _run(scenario, sampling):
    events, sm = generate(scenario)
    return analyze_events(events, sm, AnalysisConfig(sampling=sampling))


def test_sampled_totals_never_exceed_full_monitoring():
    # Monitored loads are a subset, so byte totals can only shrink. On
    # value-mutating traces the *pairing* may differ (a load compares
    # against the last monitored prior), so redundant counters are only
    # bounded on traces whose per-address values never change.
    scenario = Scenario("random_mixed", {"loads": 6000, "seed": 21})
    full = _run(scenario, SamplingConfig.disabled())
    sampled = _run(scenario, SamplingConfig(window_enable=500,
                                            window_disable=2000))
    assert sampled.totals.total_nonfp_bytes <= full.totals.total_nonfp_bytes
    assert sampled.totals.total_fp_bytes <= full.totals.total_fp_bytes
    for key, row in sampled.objects.items():
        assert row.total_instances <= full.objects[key].total_instances


def test_sampled_counters_bounded_on_value_stable_trace():
    scenario = Scenario("forward_copy", {"len": 32, "reps": 120})
    full = _run(scenario, SamplingConfig.disabled())
    sampled = _run(scenario, SamplingConfig(window_enable=300,
                                            window_disable=900))
    tf, ts = full.totals, sampled.totals
    assert ts.total_nonfp_bytes <= tf.total_nonfp_bytes
    assert ts.redundant_nonfp_bytes <= tf.redundant_nonfp_bytes
    full_rows = {k[:2]: c for k, c in full.temporal_pairs.items()}
    for key, row in sampled.temporal_pairs.items():
        counterpart = full_rows[key[:2]]
        assert row.total_instances <= counterpart.total_instances
        assert row.redundant_instances <= counterpart.redundant_instances
    for key, row in sampled.objects.items():
        assert row.total_instances <= full.objects[key].total_instances
        assert row.redundant_instances <= \
            full.objects[key].redundant_instances
