"""Accumulators, finalized reports, and their serializations."""

from __future__ import annotations

import statistics

import pytest

from tiersim import (
    Distribution,
    ResourceSpec,
    RunConfig,
    ScenarioModel,
    SeriesDisabledError,
    StopRule,
    Tier,
    Visit,
    WorkloadClass,
    export_series,
    finalize,
    report_from_json,
    report_to_json,
    report_to_table,
    simulate,
)
from tiersim.metrics import MetricsReport, RunAccumulator, Welford, _percentile


def one_station_model(replicas: int = 1, warmup: float = 0.0, series: bool = False) -> ScenarioModel:
    return ScenarioModel(
        name="m",
        tiers=(Tier(name="t", resources=(ResourceSpec(name="A", replicas=replicas),)),),
        classes=(
            WorkloadClass(
                name="w",
                arrival=Distribution.exponential(1.0),
                path=(Visit(resource="A", demand=Distribution.exponential(2.0)),),
            ),
        ),
        run=RunConfig(seed=1, stop=StopRule.after_requests(10), warmup=warmup, series_enabled=series),
    )


def test_welford_matches_batch_statistics():
    data = [0.3, 1.7, 2.2, 2.2, 9.0, 0.05, 4.4]
    w = Welford()
    for x in data:
        w.add(x)
    assert w.n == len(data)
    assert w.mean == pytest.approx(statistics.fmean(data), rel=1e-12)
    assert w.variance == pytest.approx(statistics.pvariance(data), rel=1e-12)
    assert Welford().variance == 0.0


def test_response_is_exactly_service_plus_waiting():
    acc = RunAccumulator(one_station_model())
    ra = acc.resources["A"]
    # ten visits averaging 0.150 waiting and 0.057 service
    for i in range(10):
        enqueue = float(i)
        start = enqueue + 0.150
        end = start + 0.057
        ra.offered += 1
        ra.record_visit(enqueue, start, end)
    report = finalize(acc, 10.0)
    m = report.resources["A"]
    assert m.avg_waiting == pytest.approx(0.150, abs=1e-12)
    assert m.avg_service == pytest.approx(0.057, abs=1e-12)
    assert m.avg_response == m.avg_service + m.avg_waiting  # identity, not approximation


def test_drop_probability_is_the_exact_ratio():
    acc = RunAccumulator(one_station_model())
    ra = acc.resources["A"]
    ra.offered = 1000
    ra.dropped = 761
    report = finalize(acc, 50.0)
    assert report.resources["A"].p_drop == 761 / 1000


def test_mean_in_system_integrates_occupancy():
    acc = RunAccumulator(one_station_model())
    ra = acc.resources["A"]
    ra.occupancy_change(0.0, +1)
    ra.occupancy_change(1.0, +1)
    ra.occupancy_change(2.0, -1)
    ra.occupancy_change(4.0, -1)
    ra.close(4.0)
    # area: 1*(1) + 2*(1) + 1*(2) = 5 over elapsed 4
    assert finalize(acc, 4.0).resources["A"].mean_in_system == pytest.approx(1.25, abs=1e-12)


def test_single_replica_idle_is_the_exact_complement():
    acc = RunAccumulator(one_station_model())
    ra = acc.resources["A"]
    ra.offered = 3
    ra.record_visit(0.0, 0.0, 2.0)
    ra.record_visit(2.0, 2.5, 3.0)
    ra.record_visit(3.0, 5.0, 6.5)
    m = finalize(acc, 10.0).resources["A"]
    assert m.utilization == pytest.approx(0.4, abs=1e-12)
    assert m.p_idle == 1.0 - m.utilization
    assert m.p_idle + m.utilization == 1.0  # exact in floating point


def test_multi_replica_idle_uses_all_idle_time():
    acc = RunAccumulator(one_station_model(replicas=2))
    ra = acc.resources["A"]
    ra.all_idle_ended(3.0)  # idle since 0
    ra.all_idle_began(8.0)
    ra.close(10.0)
    m = finalize(acc, 10.0).resources["A"]
    assert m.p_idle == pytest.approx(0.5, abs=1e-12)


def test_warmup_clips_time_and_filters_samples():
    acc = RunAccumulator(one_station_model(warmup=2.0))
    ra = acc.resources["A"]
    ra.offered = 2
    # enqueued before warmup: contributes clipped busy time, no samples
    ra.record_visit(0.0, 1.0, 3.0)
    assert ra.busy_time == pytest.approx(1.0, abs=1e-12)
    assert ra.waiting.n == 0
    # enqueued after warmup: a normal sample
    ra.record_visit(2.5, 2.5, 3.0)
    assert ra.waiting.n == 1
    m = finalize(acc, 4.0).resources["A"]
    # window is [2, 4]; busy 1.0 + 0.5 of it
    assert m.utilization == pytest.approx(0.75, abs=1e-12)
    assert m.avg_waiting == 0.0
    assert m.avg_service == pytest.approx(0.5, abs=1e-12)


def test_warmup_clips_occupancy_area():
    acc = RunAccumulator(one_station_model(warmup=2.0))
    ra = acc.resources["A"]
    ra.occupancy_change(0.0, +1)
    ra.occupancy_change(4.0, -1)
    ra.close(4.0)
    m = finalize(acc, 4.0).resources["A"]
    assert m.mean_in_system == pytest.approx(1.0, abs=1e-12)


def test_warmup_clips_all_idle_time():
    acc = RunAccumulator(one_station_model(replicas=2, warmup=2.0))
    ra = acc.resources["A"]
    ra.all_idle_ended(3.0)  # idle [0, 3) but only [2, 3) counts
    ra.close(6.0)
    m = finalize(acc, 6.0).resources["A"]
    assert m.p_idle == pytest.approx(0.25, abs=1e-12)


def test_zero_window_reports_zeros_and_full_idle():
    acc = RunAccumulator(one_station_model(warmup=5.0))
    acc.resources["A"].close(5.0)
    m = finalize(acc, 5.0).resources["A"]
    assert m.utilization == 0.0
    assert m.mean_in_system == 0.0
    assert m.p_idle == 1.0


def test_percentiles_nearest_rank():
    values = sorted(float(i) for i in range(1, 101))
    assert _percentile(values, 0.50) == 50.0
    assert _percentile(values, 0.95) == 95.0
    assert _percentile([1.0, 2.0, 3.0], 0.50) == 2.0
    assert _percentile([1.0, 2.0, 3.0], 0.95) == 3.0
    assert _percentile([7.0], 0.50) == 7.0
    assert _percentile([], 0.95) == 0.0
    assert _percentile([4.0, 9.0], 1.0) == 9.0
    assert _percentile([4.0, 9.0], 0.0) == 4.0


def test_report_json_is_byte_stable_and_round_trips():
    report = simulate(one_station_model(series=True))
    text = report_to_json(report)
    assert text == report_to_json(report)
    assert text.endswith("\n")

    loaded = report_from_json(text)
    assert loaded.scenario == report.scenario
    assert loaded.seed == report.seed
    assert loaded.elapsed == report.elapsed
    assert loaded.warmup == report.warmup
    assert (loaded.generated, loaded.completed, loaded.dropped, loaded.in_flight) == (
        report.generated,
        report.completed,
        report.dropped,
        report.in_flight,
    )
    assert loaded.resources == report.resources
    assert loaded.classes == report.classes
    # series rows live in the CSV, not the JSON
    assert loaded.series_enabled is False
    assert loaded.resource_series == ()


def test_report_json_carries_series_counts():
    import json

    report = simulate(one_station_model(series=True))
    doc = json.loads(report_to_json(report))
    assert doc["series"]["enabled"] is True
    assert doc["series"]["resource_rows"] == len(report.resource_series)
    assert doc["series"]["end_to_end_rows"] == len(report.end_to_end_series)
    assert doc["series"]["resource_rows"] == report.resources["A"].served


def test_export_series_format_and_order():
    base = simulate(one_station_model(series=True))
    report = MetricsReport(
        scenario=base.scenario,
        seed=base.seed,
        elapsed=base.elapsed,
        warmup=base.warmup,
        generated=base.generated,
        completed=base.completed,
        dropped=base.dropped,
        in_flight=base.in_flight,
        resources=base.resources,
        classes=base.classes,
        series_enabled=True,
        resource_series=(("A", 1.0, 0.5), ("A", 3.0, 0.25), ("B", 2.0, 0.125)),
        end_to_end_series=(("__end_to_end__", 1.0, 0.75),),
    )
    text = export_series(report)
    assert text.splitlines() == [
        "resource,arrival_time,response_time",
        "A,1.0,0.5",
        "__end_to_end__,1.0,0.75",
        "B,2.0,0.125",
        "A,3.0,0.25",
    ]


def test_export_series_refuses_when_disabled():
    report = simulate(one_station_model(series=False))
    assert report.resource_series == ()
    with pytest.raises(SeriesDisabledError):
        export_series(report)


def test_series_rows_match_counts_from_a_real_run():
    report = simulate(one_station_model(series=True))
    assert len(report.resource_series) == report.resources["A"].served
    assert len(report.end_to_end_series) == report.completed
    csv_text = export_series(report)
    assert len(csv_text.splitlines()) == 1 + len(report.resource_series) + len(report.end_to_end_series)


def test_table_rendering_lists_every_resource_and_class():
    report = simulate(one_station_model())
    table = report_to_table(report)
    assert "Resource" in table and "P(drop)" in table
    assert "\nA  " in table or table.splitlines()[2].startswith("A")
    assert "class w:" in table
    assert f"generated {report.generated}" in table
