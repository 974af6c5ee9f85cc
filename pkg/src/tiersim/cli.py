"""Command-line driver.

Subcommands: validate, run, sweep, report, oracle-check, synthesize.
Exit codes: 0 success, 1 validation or domain failure, 2 I/O failure.
Output files are written atomically (temp file + rename in the target
directory), so a crash never leaves a half-written report behind.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
import tempfile
from dataclasses import dataclass

from . import bundled
from .bottleneck import format_table, rank
from .engine import Engine
from .errors import DomainError, TiersimError, ValidationError
from .metrics import (
    MetricsReport,
    export_series,
    report_from_json,
    report_to_json,
    report_to_table,
)
from .model import (
    END_TO_END,
    DistKind,
    Distribution,
    RunConfig,
    ScenarioModel,
    StopRule,
    parse_scenario,
    serialize_scenario,
)
from .oracle import mmck
from .workload import stream_key

_BUNDLED_PREFIX = "bundled:"


def _read_input(path: str) -> str:
    """Read a file argument; 'bundled:NAME' loads a packaged example."""
    if path.startswith(_BUNDLED_PREFIX):
        return bundled.read(path[len(_BUNDLED_PREFIX) :])
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tiersim.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _apply_overrides(model: ScenarioModel, args: argparse.Namespace) -> ScenarioModel:
    run = model.run
    if getattr(args, "seed", None) is not None:
        run = dataclasses.replace(run, seed=args.seed)
    if getattr(args, "requests", None) is not None:
        run = dataclasses.replace(run, stop=StopRule.after_requests(args.requests))
    if getattr(args, "time", None) is not None:
        run = dataclasses.replace(run, stop=StopRule.after_time(args.time))
    if getattr(args, "warmup", None) is not None:
        run = dataclasses.replace(run, warmup=args.warmup)
    if getattr(args, "series", False):
        run = dataclasses.replace(run, series_enabled=True)
    return dataclasses.replace(model, run=run)


# ----------------------------------------------------------------------
# sweep support


@dataclass(frozen=True)
class SweepCell:
    """Replication-averaged metrics for one (rate, resource) pair."""

    rate: float
    resource: str
    avg_response: float
    avg_service: float
    avg_waiting: float
    utilization: float
    p_idle: float
    p_drop: float


@dataclass(frozen=True)
class SweepResult:
    rates: tuple[float, ...]
    replications: int
    cells: tuple[SweepCell, ...]
    # raw per-replication reports, for callers that need spread
    reports: dict[float, tuple[MetricsReport, ...]]


def parse_rate_grid(text: str) -> tuple[float, ...]:
    """Either 'start:stop:count' (inclusive grid) or 'a,b,c'."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise DomainError(f"rate grid must be start:stop:count, got {text!r}")
            start, stop = float(parts[0]), float(parts[1])
            count = int(parts[2])
            if count < 1:
                raise DomainError("rate grid needs at least one point")
            if count == 1:
                return (start,)
            step = (stop - start) / (count - 1)
            return tuple(start + i * step for i in range(count))
        rates = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise DomainError(f"rate grid must be numeric, got {text!r}") from None
    if not rates:
        raise DomainError(f"no rates in {text!r}")
    return rates


def _with_arrival_rate(model: ScenarioModel, rate: float, seed: int) -> ScenarioModel:
    if rate <= 0:
        raise DomainError(f"swept arrival rate must be > 0, got {rate!r}")
    classes = []
    for cls in model.classes:
        if cls.arrival.kind is not DistKind.EXPONENTIAL:
            raise ValidationError(
                f"sweep needs exponential arrivals; class {cls.name!r} uses {cls.arrival.kind.value}"
            )
        classes.append(dataclasses.replace(cls, arrival=Distribution.exponential(rate)))
    run = dataclasses.replace(model.run, seed=seed)
    return dataclasses.replace(model, classes=tuple(classes), run=run)


def run_sweep(model: ScenarioModel, rates: tuple[float, ...], replications: int, master_seed: int) -> SweepResult:
    """Simulate every (rate, replication) pair and average per rate.

    Replication seeds derive from the master seed and the grid position
    by the same stable hash the streams use, so the whole sweep is one
    deterministic function of (scenario, rates, replications, seed).
    """
    if replications < 1:
        raise DomainError("replications must be >= 1")
    cells: list[SweepCell] = []
    reports: dict[float, tuple[MetricsReport, ...]] = {}
    for ri, rate in enumerate(rates):
        reps = []
        for k in range(replications):
            seed = stream_key(master_seed, f"sweep:rate[{ri}]:rep[{k}]") % 2**64
            reps.append(Engine(_with_arrival_rate(model, rate, seed)).run())
        reports[rate] = tuple(reps)
        for name in reps[0].resources:
            n = len(reps)
            cells.append(
                SweepCell(
                    rate=rate,
                    resource=name,
                    avg_response=sum(r.resources[name].avg_response for r in reps) / n,
                    avg_service=sum(r.resources[name].avg_service for r in reps) / n,
                    avg_waiting=sum(r.resources[name].avg_waiting for r in reps) / n,
                    utilization=sum(r.resources[name].utilization for r in reps) / n,
                    p_idle=sum(r.resources[name].p_idle for r in reps) / n,
                    p_drop=sum(r.resources[name].p_drop for r in reps) / n,
                )
            )
        for cname in reps[0].classes:
            n = len(reps)
            mean_resp = sum(r.classes[cname].mean_response for r in reps) / n
            cells.append(
                SweepCell(
                    rate=rate,
                    resource=f"{END_TO_END}:{cname}",
                    avg_response=mean_resp,
                    avg_service=0.0,
                    avg_waiting=0.0,
                    utilization=0.0,
                    p_idle=0.0,
                    p_drop=sum(
                        (r.classes[cname].dropped / r.classes[cname].generated if r.classes[cname].generated else 0.0)
                        for r in reps
                    )
                    / n,
                )
            )
    return SweepResult(rates=tuple(rates), replications=replications, cells=tuple(cells), reports=reports)


def sweep_to_csv(result: SweepResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["rate", "resource", "avg_response", "avg_service", "avg_waiting", "utilization", "p_idle", "p_drop"])
    for c in result.cells:
        writer.writerow([repr(c.rate), c.resource] + [repr(v) for v in (c.avg_response, c.avg_service, c.avg_waiting, c.utilization, c.p_idle, c.p_drop)])
    return out.getvalue()


# ----------------------------------------------------------------------
# oracle-check support


def build_station_model(lam: float, mu: float, servers: int, capacity: int, requests: int, seed: int) -> ScenarioModel:
    """Single M/M/c/K station driven until `requests` terminal outcomes."""
    from .model import ResourceSpec, Tier, Visit, WorkloadClass

    return ScenarioModel(
        name="station-check",
        tiers=(Tier(name="station", resources=(ResourceSpec(name="station", replicas=servers, queue_capacity=capacity),)),),
        classes=(
            WorkloadClass(
                name="load",
                arrival=Distribution.exponential(lam),
                path=(Visit(resource="station", demand=Distribution.exponential(mu)),),
            ),
        ),
        run=RunConfig(seed=seed, stop=StopRule.after_requests(requests)),
    )


def run_oracle_check(lam: float, mu: float, servers: int, capacity: int, requests: int, seed: int):
    """Simulate the station and pair each metric with its closed form."""
    analytic = mmck(lam, mu, servers, capacity)
    report = Engine(build_station_model(lam, mu, servers, capacity, requests, seed)).run()
    sim = report.resources["station"]
    pairs = [
        ("utilization", sim.utilization, analytic.utilization),
        ("p_drop", sim.p_drop, analytic.p_block),
        ("avg_waiting", sim.avg_waiting, analytic.mean_wait),
        ("avg_response", sim.avg_response, analytic.mean_response),
        ("mean_in_system", sim.mean_in_system, analytic.mean_in_system),
    ]
    rows = []
    for name, simulated, reference in pairs:
        if reference != 0.0:
            rel = abs(simulated - reference) / abs(reference)
        else:
            rel = abs(simulated - reference)
        rows.append((name, simulated, reference, rel))
    return rows


# ----------------------------------------------------------------------
# subcommand handlers


def _cmd_validate(args: argparse.Namespace) -> int:
    text = _read_input(args.scenario)
    model = parse_scenario(text)
    if not args.quiet:
        print(f"{model.name}: ok ({len(model.resources())} resources, {len(model.classes)} classes)")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    model = _apply_overrides(parse_scenario(_read_input(args.scenario)), args)
    report = Engine(model).run()
    if args.report:
        _write_atomic(args.report, report_to_json(report))
    if args.series_out:
        _write_atomic(args.series_out, export_series(report))
    if not args.quiet:
        if args.format == "json":
            sys.stdout.write(report_to_json(report))
        else:
            sys.stdout.write(report_to_table(report))
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    model = parse_scenario(_read_input(args.scenario))
    seed = args.seed if args.seed is not None else model.run.seed
    if args.requests is not None:
        model = dataclasses.replace(model, run=dataclasses.replace(model.run, stop=StopRule.after_requests(args.requests)))
    result = run_sweep(model, parse_rate_grid(args.rates), args.replications, seed)
    text = sweep_to_csv(result)
    if args.output:
        _write_atomic(args.output, text)
        if not args.quiet:
            print(f"wrote {len(result.cells)} rows to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report = report_from_json(_read_input(args.report))
    if args.bottlenecks:
        ranking = rank(report, drop_threshold=args.drop_threshold, wait_threshold=args.wait_threshold)
        if args.format == "json":
            import json as _json

            doc = {
                "drop_threshold": ranking.drop_threshold,
                "wait_threshold": ranking.wait_threshold,
                "entries": [dataclasses.asdict(e) for e in ranking.entries],
            }
            sys.stdout.write(_json.dumps(doc, indent=2, sort_keys=True) + "\n")
        else:
            sys.stdout.write(format_table(ranking))
    else:
        if args.format == "json":
            sys.stdout.write(report_to_json(report))
        else:
            sys.stdout.write(report_to_table(report))
    return 0


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    rows = run_oracle_check(args.lam, args.mu, args.servers, args.capacity, args.requests, args.seed)
    if args.format == "json":
        import json as _json

        doc = {name: {"simulated": s, "analytic": a, "rel_error": e} for name, s, a, e in rows}
        sys.stdout.write(_json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        print(f"{'metric':<16}{'simulated':>14}{'analytic':>14}{'rel_error':>12}")
        for name, s, a, e in rows:
            print(f"{name:<16}{s:>14.6g}{a:>14.6g}{e:>12.3g}")
    return 0


def _cmd_synthesize(args: argparse.Namespace) -> int:
    from .frontend import parse_deployment, parse_execution, synthesize_scenario

    execution = parse_execution(_read_input(args.execution))
    deployment = parse_deployment(_read_input(args.deployment))
    if args.interarrival is not None:
        arrival = Distribution.deterministic(args.interarrival)
    else:
        arrival = Distribution.exponential(args.arrival_rate)
    run = RunConfig(
        seed=args.seed if args.seed is not None else 1,
        stop=StopRule.after_time(args.time) if args.time is not None else StopRule.after_requests(args.requests or 1000),
        warmup=args.warmup or 0.0,
        series_enabled=bool(args.series),
    )
    from .model import UNBOUNDED

    model = synthesize_scenario(
        execution,
        deployment,
        scenario_name=args.name,
        class_name=args.class_name,
        arrival=arrival,
        max_requests=args.max_requests if args.max_requests is not None else UNBOUNDED,
        run=run,
    )
    text = serialize_scenario(model)
    if args.output:
        _write_atomic(args.output, text)
        if not args.quiet:
            print(f"wrote scenario {model.name!r} to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tiersim",
        description="Deterministic discrete-event simulator for multi-tier queueing architectures.",
    )
    parser.add_argument("--version", action="version", version="tiersim 0.1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--quiet", action="store_true", help="suppress informational output")

    p = sub.add_parser("validate", help="parse and check a scenario file")
    p.add_argument("scenario", help="scenario JSON path (or bundled:NAME)")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="simulate a scenario and report metrics")
    p.add_argument("scenario", help="scenario JSON path (or bundled:NAME)")
    p.add_argument("--seed", type=int, help="override the run seed")
    p.add_argument("--requests", type=int, help="stop after N terminal requests")
    p.add_argument("--time", type=float, help="stop at simulated time T")
    p.add_argument("--warmup", type=float, help="exclude samples arriving before this time")
    p.add_argument("--series", action="store_true", help="record raw response series")
    p.add_argument("--report", help="write the JSON report here (atomic)")
    p.add_argument("--series-out", dest="series_out", help="write the series CSV here (atomic)")
    p.add_argument("--format", choices=("table", "json"), default="table")
    common(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="re-run a scenario over an arrival-rate grid")
    p.add_argument("scenario", help="scenario JSON path (or bundled:NAME)")
    p.add_argument("--rates", required=True, help="grid: start:stop:count or comma list")
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--requests", type=int, help="override stop: terminal requests per run")
    p.add_argument("--seed", type=int, help="master seed for replication seeds")
    p.add_argument("--output", help="write aggregated CSV here (atomic)")
    common(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="render a saved report, optionally ranking bottlenecks")
    p.add_argument("report", help="report JSON written by run --report")
    p.add_argument("--bottlenecks", action="store_true", help="rank resources by bottleneck score")
    p.add_argument("--drop-threshold", dest="drop_threshold", type=float, default=0.5)
    p.add_argument("--wait-threshold", dest="wait_threshold", type=float, default=0.5)
    p.add_argument("--format", choices=("table", "json"), default="table")
    common(p)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("oracle-check", help="simulate one M/M/c/K station and compare with the closed form")
    p.add_argument("--lambda", dest="lam", type=float, required=True, help="arrival rate")
    p.add_argument("--mu", type=float, required=True, help="service rate per server")
    p.add_argument("-c", "--servers", type=int, default=1)
    p.add_argument("-K", "--capacity", type=int, default=0, help="waiting slots")
    p.add_argument("--requests", type=int, default=100000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--format", choices=("table", "json"), default="table")
    common(p)
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("synthesize", help="build a scenario from a step script and deployment map")
    p.add_argument("execution", help="step script path (or bundled:NAME)")
    p.add_argument("deployment", help="deployment JSON path (or bundled:NAME)")
    p.add_argument("--name", default="synthesized", help="scenario name")
    p.add_argument("--class-name", dest="class_name", default="sessions")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--arrival-rate", dest="arrival_rate", type=float, help="exponential arrival rate")
    group.add_argument("--interarrival", type=float, help="fixed interarrival gap")
    p.add_argument("--max-requests", dest="max_requests", type=int, help="cap generated sessions")
    p.add_argument("--seed", type=int)
    p.add_argument("--requests", type=int, help="stop rule: terminal requests")
    p.add_argument("--time", type=float, help="stop rule: simulated time")
    p.add_argument("--warmup", type=float)
    p.add_argument("--series", action="store_true")
    p.add_argument("--output", help="write the scenario JSON here (atomic)")
    common(p)
    p.set_defaults(func=_cmd_synthesize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TiersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
