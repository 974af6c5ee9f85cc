"""Measurement: streaming accumulators and the finished report.

The engine feeds raw observations in as they happen (one call per
admission, drop, or completed service interval); nothing here looks at
simulator state. Means use Welford updates so a million samples lose no
precision to cancellation. Per-visit response is reported as the sum of
the waiting and service means, which makes the response = service +
waiting identity exact rather than merely close.

Warmup is transient deletion: a visit whose enqueue time falls before
the warmup point contributes to no average, and time-integrated
quantities (busy time, all-idle time, occupancy area) only count the
portion of each interval after warmup. Raw counts (offered, served,
dropped) are never filtered, so conservation checks always balance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import SeriesDisabledError
from .model import END_TO_END, ScenarioModel


class Welford:
    """Streaming mean/variance accumulator."""

    __slots__ = ("n", "mean", "_m2")

    def __init__(self):
        self.n = 0
        self.mean = 0.0
        self._m2 = 0.0

    def add(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (x - self.mean)

    @property
    def variance(self) -> float:
        return self._m2 / self.n if self.n else 0.0


class ResourceAccumulator:
    """Running observations for one resource."""

    __slots__ = (
        "name",
        "replicas",
        "warmup",
        "offered",
        "dropped",
        "served",
        "waiting",
        "service",
        "busy_time",
        "all_idle_time",
        "_idle_since",
        "_occ_n",
        "_occ_last",
        "area",
        "series_rows",
        "record_series",
    )

    def __init__(self, name: str, replicas: int, warmup: float, record_series: bool):
        self.name = name
        self.replicas = replicas
        self.warmup = warmup
        self.offered = 0
        self.dropped = 0
        self.served = 0
        self.waiting = Welford()
        self.service = Welford()
        self.busy_time = 0.0
        self.all_idle_time = 0.0
        self._idle_since: float | None = 0.0  # all replicas idle from t=0
        self._occ_n = 0
        self._occ_last = 0.0
        self.area = 0.0
        self.series_rows: list[tuple[float, float]] = []
        self.record_series = record_series

    def record_offered(self) -> None:
        self.offered += 1

    def record_drop(self, now: float) -> None:
        self.dropped += 1

    def record_visit(self, enqueue: float, start: float, end: float) -> None:
        """One completed service; the busy interval is [start, end]."""
        self.served += 1
        warmup = self.warmup
        if warmup == 0.0:
            self.busy_time += end - start
        else:
            self.busy_time += max(0.0, end - max(start, warmup))
            if enqueue < warmup:
                return
        self.waiting.add(start - enqueue)
        self.service.add(end - start)
        if self.record_series:
            self.series_rows.append((enqueue, end - enqueue))

    def occupancy_change(self, now: float, delta: int) -> None:
        """Request count at this resource changed by delta at time now."""
        warmup = self.warmup
        if warmup == 0.0:
            self.area += self._occ_n * (now - self._occ_last)
        elif now > warmup:
            self.area += self._occ_n * (now - max(self._occ_last, warmup))
        self._occ_last = now
        self._occ_n += delta

    def all_idle_ended(self, now: float) -> None:
        since = self._idle_since
        if since is not None:
            self.all_idle_time += max(0.0, now - max(since, self.warmup))
            self._idle_since = None

    def all_idle_began(self, now: float) -> None:
        self._idle_since = now

    def close(self, elapsed: float) -> None:
        """Flush open intervals at the stop clock."""
        self.occupancy_change(elapsed, 0)
        if self._idle_since is not None:
            self.all_idle_time += max(0.0, elapsed - max(self._idle_since, self.warmup))
            self._idle_since = None


class ClassAccumulator:
    """Running observations for one workload class."""

    __slots__ = ("name", "warmup", "generated", "completed", "dropped", "response", "responses", "series_rows", "record_series")

    def __init__(self, name: str, warmup: float, record_series: bool):
        self.name = name
        self.warmup = warmup
        self.generated = 0
        self.completed = 0
        self.dropped = 0
        self.response = Welford()
        self.responses: list[float] = []
        self.series_rows: list[tuple[float, float]] = []
        self.record_series = record_series

    def record_completion(self, arrival: float, response: float) -> None:
        self.completed += 1
        if arrival >= self.warmup:
            self.response.add(response)
            self.responses.append(response)
            if self.record_series:
                self.series_rows.append((arrival, response))

    def record_session_drop(self) -> None:
        self.dropped += 1


class RunAccumulator:
    """Everything recorded during one run, keyed to one scenario."""

    def __init__(self, model: ScenarioModel):
        warmup = model.run.warmup
        series = model.run.series_enabled
        self.scenario = model.name
        self.seed = model.run.seed
        self.warmup = warmup
        self.series_enabled = series
        self.resources: dict[str, ResourceAccumulator] = {
            r.name: ResourceAccumulator(r.name, r.replicas, warmup, series) for r in model.resources()
        }
        self.classes: dict[str, ClassAccumulator] = {
            c.name: ClassAccumulator(c.name, warmup, series) for c in model.classes
        }
        # end-state snapshots, written by the engine just before finalize
        self.queued_at_stop: dict[str, int] = {}
        self.in_service_at_stop: dict[str, int] = {}


@dataclass(frozen=True)
class ResourceMetrics:
    """The per-resource report row: response/service/waiting averages,
    idle and drop probabilities, plus raw counts for conservation checks."""

    avg_response: float
    avg_service: float
    avg_waiting: float
    utilization: float
    p_idle: float
    p_drop: float
    mean_in_system: float
    offered: int
    served: int
    dropped: int
    queued_at_stop: int
    in_service_at_stop: int


@dataclass(frozen=True)
class ClassMetrics:
    generated: int
    completed: int
    dropped: int
    mean_response: float
    p50_response: float
    p95_response: float


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    seed: int
    elapsed: float
    warmup: float
    generated: int
    completed: int
    dropped: int
    in_flight: int
    resources: dict[str, ResourceMetrics]
    classes: dict[str, ClassMetrics]
    series_enabled: bool
    resource_series: tuple[tuple[str, float, float], ...]
    end_to_end_series: tuple[tuple[str, float, float], ...]


def _percentile(sorted_values: list[float], q: float) -> float:
    """Nearest-rank percentile; 0.0 when there are no samples."""
    n = len(sorted_values)
    if n == 0:
        return 0.0
    idx = max(0, math.ceil(q * n) - 1)
    return sorted_values[min(idx, n - 1)]


def finalize(acc: RunAccumulator, elapsed: float) -> MetricsReport:
    """Turn raw accumulators into the immutable report.

    ``elapsed`` is the stop clock; all rates and probabilities use the
    window [warmup, elapsed].
    """
    window = max(0.0, elapsed - acc.warmup)

    resources: dict[str, ResourceMetrics] = {}
    for name, ra in acc.resources.items():
        avg_waiting = ra.waiting.mean
        avg_service = ra.service.mean
        if window > 0.0:
            utilization = ra.busy_time / (ra.replicas * window)
            mean_in_system = ra.area / window
        else:
            utilization = 0.0
            mean_in_system = 0.0
        if ra.replicas == 1:
            # exact complement; a lone server is idle iff it is not busy
            p_idle = 1.0 - utilization
        else:
            p_idle = ra.all_idle_time / window if window > 0.0 else 1.0
        p_drop = ra.dropped / ra.offered if ra.offered else 0.0
        resources[name] = ResourceMetrics(
            avg_response=avg_service + avg_waiting,
            avg_service=avg_service,
            avg_waiting=avg_waiting,
            utilization=utilization,
            p_idle=p_idle,
            p_drop=p_drop,
            mean_in_system=mean_in_system,
            offered=ra.offered,
            served=ra.served,
            dropped=ra.dropped,
            queued_at_stop=acc.queued_at_stop.get(name, 0),
            in_service_at_stop=acc.in_service_at_stop.get(name, 0),
        )

    classes: dict[str, ClassMetrics] = {}
    for name, ca in acc.classes.items():
        ordered = sorted(ca.responses)
        classes[name] = ClassMetrics(
            generated=ca.generated,
            completed=ca.completed,
            dropped=ca.dropped,
            mean_response=ca.response.mean,
            p50_response=_percentile(ordered, 0.50),
            p95_response=_percentile(ordered, 0.95),
        )

    generated = sum(ca.generated for ca in acc.classes.values())
    completed = sum(ca.completed for ca in acc.classes.values())
    dropped = sum(ca.dropped for ca in acc.classes.values())

    resource_series: list[tuple[str, float, float]] = []
    end_series: list[tuple[str, float, float]] = []
    if acc.series_enabled:
        for name, ra in acc.resources.items():
            resource_series.extend((name, t, r) for t, r in ra.series_rows)
        for name, ca in acc.classes.items():
            end_series.extend((END_TO_END, t, r) for t, r in ca.series_rows)

    return MetricsReport(
        scenario=acc.scenario,
        seed=acc.seed,
        elapsed=elapsed,
        warmup=acc.warmup,
        generated=generated,
        completed=completed,
        dropped=dropped,
        in_flight=generated - completed - dropped,
        resources=resources,
        classes=classes,
        series_enabled=acc.series_enabled,
        resource_series=tuple(resource_series),
        end_to_end_series=tuple(end_series),
    )


def report_to_json(report: MetricsReport) -> str:
    """Stable JSON rendering: identical runs give identical bytes.

    Series rows live in their own CSV (see export_series); the JSON
    carries only their counts.
    """
    doc = {
        "scenario": report.scenario,
        "seed": report.seed,
        "elapsed": report.elapsed,
        "warmup": report.warmup,
        "totals": {
            "generated": report.generated,
            "completed": report.completed,
            "dropped": report.dropped,
            "in_flight": report.in_flight,
        },
        "resources": {
            name: {
                "avg_response": m.avg_response,
                "avg_service": m.avg_service,
                "avg_waiting": m.avg_waiting,
                "utilization": m.utilization,
                "p_idle": m.p_idle,
                "p_drop": m.p_drop,
                "mean_in_system": m.mean_in_system,
                "offered": m.offered,
                "served": m.served,
                "dropped": m.dropped,
                "queued_at_stop": m.queued_at_stop,
                "in_service_at_stop": m.in_service_at_stop,
            }
            for name, m in report.resources.items()
        },
        "classes": {
            name: {
                "generated": c.generated,
                "completed": c.completed,
                "dropped": c.dropped,
                "mean_response": c.mean_response,
                "p50_response": c.p50_response,
                "p95_response": c.p95_response,
            }
            for name, c in report.classes.items()
        },
        "series": {
            "enabled": report.series_enabled,
            "resource_rows": len(report.resource_series),
            "end_to_end_rows": len(report.end_to_end_series),
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> MetricsReport:
    """Load a report written by report_to_json.

    Series rows are not stored in the JSON (only their counts), so a
    loaded report answers metric queries but cannot re-export series.
    """
    doc = json.loads(text)
    resources = {
        name: ResourceMetrics(
            avg_response=m["avg_response"],
            avg_service=m["avg_service"],
            avg_waiting=m["avg_waiting"],
            utilization=m["utilization"],
            p_idle=m["p_idle"],
            p_drop=m["p_drop"],
            mean_in_system=m["mean_in_system"],
            offered=m["offered"],
            served=m["served"],
            dropped=m["dropped"],
            queued_at_stop=m["queued_at_stop"],
            in_service_at_stop=m["in_service_at_stop"],
        )
        for name, m in doc["resources"].items()
    }
    classes = {
        name: ClassMetrics(
            generated=c["generated"],
            completed=c["completed"],
            dropped=c["dropped"],
            mean_response=c["mean_response"],
            p50_response=c["p50_response"],
            p95_response=c["p95_response"],
        )
        for name, c in doc["classes"].items()
    }
    totals = doc["totals"]
    return MetricsReport(
        scenario=doc["scenario"],
        seed=doc["seed"],
        elapsed=doc["elapsed"],
        warmup=doc["warmup"],
        generated=totals["generated"],
        completed=totals["completed"],
        dropped=totals["dropped"],
        in_flight=totals["in_flight"],
        resources=resources,
        classes=classes,
        series_enabled=False,
        resource_series=(),
        end_to_end_series=(),
    )


def report_to_table(report: MetricsReport) -> str:
    """Fixed-width text table, one row per resource in model order."""
    headers = ("Resource", "AvgResponse", "AvgService", "AvgWaiting", "Utilization", "P(idle)", "P(drop)")
    rows = [
        (
            name,
            f"{m.avg_response:.6g}",
            f"{m.avg_service:.6g}",
            f"{m.avg_waiting:.6g}",
            f"{m.utilization:.6g}",
            f"{m.p_idle:.6g}",
            f"{m.p_drop:.6g}",
        )
        for name, m in report.resources.items()
    ]
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i]) for i in range(len(headers))]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    lines.extend("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows)
    lines.append("")
    lines.append(
        f"elapsed {report.elapsed:.6g}  generated {report.generated}  "
        f"completed {report.completed}  dropped {report.dropped}  in-flight {report.in_flight}"
    )
    for name, c in report.classes.items():
        lines.append(
            f"class {name}: completed {c.completed}, mean response {c.mean_response:.6g}, "
            f"p50 {c.p50_response:.6g}, p95 {c.p95_response:.6g}"
        )
    return "\n".join(lines) + "\n"


def export_series(report: MetricsReport) -> str:
    """CSV of raw (arrival time, response time) points for plotting.

    One row per completed visit, labeled with its resource, plus one row
    per completed session labeled __end_to_end__. Rows are ordered by
    arrival time (stable for ties), which is what a response-vs-arrival
    scatter needs.
    """
    if not report.series_enabled:
        raise SeriesDisabledError("this run did not record series data (enable run.series)")
    rows = list(report.resource_series) + list(report.end_to_end_series)
    rows.sort(key=lambda row: row[1])
    lines = ["resource,arrival_time,response_time"]
    lines.extend(f"{label},{t!r},{r!r}" for label, t, r in rows)
    return "\n".join(lines) + "\n"
