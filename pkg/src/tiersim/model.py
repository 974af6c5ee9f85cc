"""Scenario model: the validated description of what to simulate.

A scenario is a set of tiers holding queueing resources, a set of open
workload classes that walk an ordered path of visits across those
resources, and a run configuration (seed, stop rule, warmup). Instances
are immutable after parsing; the parser and ``validate`` enforce every
structural invariant, so downstream modules never re-check references.

The on-disk format is strict JSON: unknown keys are rejected rather than
ignored, which catches typos like ``"replicsa"`` before a run silently
uses a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import ScenarioSyntaxError, ValidationError

FORMAT_VERSION = 1

# Sentinels for "no limit". Stored as float('inf') so comparisons work
# directly; serialized as the strings "inf" / "unbounded".
INFINITE = math.inf
UNBOUNDED = math.inf

# Pseudo-resource label used by series export for whole-session rows.
# Reserved so a scenario resource can never collide with it.
END_TO_END = "__end_to_end__"


class DistKind(str, Enum):
    EXPONENTIAL = "exponential"
    DETERMINISTIC = "deterministic"
    UNIFORM = "uniform"


class Discipline(str, Enum):
    FCFS = "fcfs"


class BalancerPolicy(str, Enum):
    JSQ = "jsq"
    ROUND_ROBIN = "round_robin"
    RANDOM = "random"


class StopKind(str, Enum):
    AFTER_REQUESTS = "after_requests"
    AFTER_TIME = "after_time"


@dataclass(frozen=True)
class Distribution:
    """A sampling rule for interarrival gaps or service demands.

    Exactly one parameter set is meaningful per kind; unused fields stay
    at 0.0 so equality and round-trip serialization are well defined.
    """

    kind: DistKind
    rate: float = 0.0
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0

    @staticmethod
    def exponential(rate: float) -> "Distribution":
        return Distribution(DistKind.EXPONENTIAL, rate=float(rate))

    @staticmethod
    def deterministic(value: float) -> "Distribution":
        return Distribution(DistKind.DETERMINISTIC, value=float(value))

    @staticmethod
    def uniform(lo: float, hi: float) -> "Distribution":
        return Distribution(DistKind.UNIFORM, lo=float(lo), hi=float(hi))

    def mean(self) -> float:
        if self.kind is DistKind.EXPONENTIAL:
            return 1.0 / self.rate
        if self.kind is DistKind.DETERMINISTIC:
            return self.value
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class ResourceSpec:
    """One service station: ``replicas`` parallel servers sharing a
    bounded pool of waiting positions.

    ``queue_capacity`` counts waiting slots only, so the station holds at
    most ``replicas + queue_capacity`` requests at once.
    """

    name: str
    replicas: int = 1
    queue_capacity: int | float = INFINITE
    discipline: Discipline = Discipline.FCFS
    balancer: BalancerPolicy = BalancerPolicy.JSQ


@dataclass(frozen=True)
class Tier:
    name: str
    resources: tuple[ResourceSpec, ...]


@dataclass(frozen=True)
class Visit:
    """One stop on a class path: which resource, and the demand drawn there."""

    resource: str
    demand: Distribution


@dataclass(frozen=True)
class WorkloadClass:
    """An open arrival stream walking ``path`` in order.

    ``max_requests`` bounds how many sessions this class ever generates;
    UNBOUNDED leaves termination to the run's stop rule.
    """

    name: str
    arrival: Distribution
    path: tuple[Visit, ...]
    max_requests: int | float = UNBOUNDED


@dataclass(frozen=True)
class StopRule:
    kind: StopKind
    n: int = 0
    t: float = 0.0

    @staticmethod
    def after_requests(n: int) -> "StopRule":
        return StopRule(StopKind.AFTER_REQUESTS, n=int(n))

    @staticmethod
    def after_time(t: float) -> "StopRule":
        return StopRule(StopKind.AFTER_TIME, t=float(t))


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1
    stop: StopRule = field(default_factory=lambda: StopRule.after_requests(1000))
    warmup: float = 0.0
    series_enabled: bool = False


@dataclass(frozen=True)
class ScenarioModel:
    name: str
    tiers: tuple[Tier, ...]
    classes: tuple[WorkloadClass, ...]
    run: RunConfig

    def resources(self) -> tuple[ResourceSpec, ...]:
        """All resources in tier declaration order."""
        return tuple(r for tier in self.tiers for r in tier.resources)

    def resource(self, name: str) -> ResourceSpec:
        for tier in self.tiers:
            for r in tier.resources:
                if r.name == name:
                    return r
        raise KeyError(name)


@dataclass(frozen=True)
class ValidationIssue:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(i) for i in self.issues)


def _valid_name(name: object) -> bool:
    if not isinstance(name, str) or not name:
        return False
    if name != name.strip() or any(ch.isspace() for ch in name):
        return False
    return True


def _check_distribution(dist: Distribution, path: str, issues: list[ValidationIssue]) -> None:
    if dist.kind is DistKind.EXPONENTIAL:
        if not (isinstance(dist.rate, (int, float)) and math.isfinite(dist.rate) and dist.rate > 0):
            issues.append(ValidationIssue(path, f"exponential rate must be finite and > 0, got {dist.rate!r}"))
    elif dist.kind is DistKind.DETERMINISTIC:
        if not (isinstance(dist.value, (int, float)) and math.isfinite(dist.value) and dist.value >= 0):
            issues.append(ValidationIssue(path, f"deterministic value must be finite and >= 0, got {dist.value!r}"))
    elif dist.kind is DistKind.UNIFORM:
        ok = (
            isinstance(dist.lo, (int, float))
            and isinstance(dist.hi, (int, float))
            and math.isfinite(dist.lo)
            and math.isfinite(dist.hi)
            and 0 <= dist.lo <= dist.hi
        )
        if not ok:
            issues.append(ValidationIssue(path, f"uniform bounds must satisfy 0 <= lo <= hi, got ({dist.lo!r}, {dist.hi!r})"))


def validate(model: ScenarioModel) -> ValidationReport:
    """Check every structural invariant; one issue per violation.

    Returns a report rather than raising so callers can show all
    problems at once (the CLI prints each issue on its own line).
    """
    issues: list[ValidationIssue] = []

    if not _valid_name(model.name):
        issues.append(ValidationIssue("name", f"scenario name must be a non-empty token, got {model.name!r}"))

    if not model.tiers:
        issues.append(ValidationIssue("tiers", "at least one tier is required"))
    if not model.classes:
        issues.append(ValidationIssue("classes", "at least one workload class is required"))

    seen_resources: dict[str, str] = {}
    seen_tiers: set[str] = set()
    for ti, tier in enumerate(model.tiers):
        tpath = f"tiers[{ti}]"
        if not _valid_name(tier.name):
            issues.append(ValidationIssue(tpath, f"tier name must be a non-empty token, got {tier.name!r}"))
        elif tier.name in seen_tiers:
            issues.append(ValidationIssue(tpath, f"duplicate tier name {tier.name!r}"))
        else:
            seen_tiers.add(tier.name)
        if not tier.resources:
            issues.append(ValidationIssue(tpath, "tier holds no resources"))
        for ri, res in enumerate(tier.resources):
            rpath = f"{tpath}.resources[{ri}]"
            if not _valid_name(res.name):
                issues.append(ValidationIssue(rpath, f"resource name must be a non-empty token, got {res.name!r}"))
            elif res.name == END_TO_END:
                issues.append(ValidationIssue(rpath, f"resource name {END_TO_END!r} is reserved"))
            elif res.name in seen_resources:
                issues.append(
                    ValidationIssue(rpath, f"duplicate resource name {res.name!r} (also in {seen_resources[res.name]})")
                )
            else:
                seen_resources[res.name] = tpath
            if not (isinstance(res.replicas, int) and res.replicas >= 1):
                issues.append(ValidationIssue(rpath, f"replicas must be an integer >= 1, got {res.replicas!r}"))
            cap = res.queue_capacity
            cap_ok = cap == INFINITE or (isinstance(cap, int) and not isinstance(cap, bool) and cap >= 0)
            if not cap_ok:
                issues.append(ValidationIssue(rpath, f"queue_capacity must be an integer >= 0 or infinite, got {cap!r}"))

    seen_classes: set[str] = set()
    for ci, cls in enumerate(model.classes):
        cpath = f"classes[{ci}]"
        if not _valid_name(cls.name):
            issues.append(ValidationIssue(cpath, f"class name must be a non-empty token, got {cls.name!r}"))
        elif cls.name in seen_classes:
            issues.append(ValidationIssue(cpath, f"duplicate class name {cls.name!r}"))
        else:
            seen_classes.add(cls.name)
        _check_distribution(cls.arrival, f"{cpath}.arrival", issues)
        if not cls.path:
            issues.append(ValidationIssue(f"{cpath}.path", "path must hold at least one visit"))
        for vi, visit in enumerate(cls.path):
            vpath = f"{cpath}.path[{vi}]"
            if visit.resource not in seen_resources:
                issues.append(ValidationIssue(vpath, f"visit references unknown resource {visit.resource!r}"))
            _check_distribution(visit.demand, f"{vpath}.demand", issues)
        mr = cls.max_requests
        mr_ok = mr == UNBOUNDED or (isinstance(mr, int) and not isinstance(mr, bool) and mr >= 1)
        if not mr_ok:
            issues.append(ValidationIssue(cpath, f"max_requests must be an integer >= 1 or unbounded, got {mr!r}"))

    run = model.run
    if not (isinstance(run.seed, int) and 0 <= run.seed < 2**64):
        issues.append(ValidationIssue("run.seed", f"seed must be an unsigned 64-bit integer, got {run.seed!r}"))
    if run.stop.kind is StopKind.AFTER_REQUESTS:
        if not (isinstance(run.stop.n, int) and run.stop.n >= 1):
            issues.append(ValidationIssue("run.stop", f"after_requests count must be >= 1, got {run.stop.n!r}"))
    else:
        if not (isinstance(run.stop.t, (int, float)) and math.isfinite(run.stop.t) and run.stop.t > 0):
            issues.append(ValidationIssue("run.stop", f"after_time horizon must be finite and > 0, got {run.stop.t!r}"))
    if not (isinstance(run.warmup, (int, float)) and math.isfinite(run.warmup) and run.warmup >= 0):
        issues.append(ValidationIssue("run.warmup", f"warmup must be finite and >= 0, got {run.warmup!r}"))

    return ValidationReport(tuple(issues))


# ----------------------------------------------------------------------
# JSON parsing. Strict: every object lists its allowed keys.


def _require_keys(obj: dict, allowed: set[str], required: set[str], path: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ValidationError(f"{path}: unknown key {key!r}")
    for key in required:
        if key not in obj:
            raise ValidationError(f"{path}: missing required key {key!r}")


def _as_dict(obj: object, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected an object, got {type(obj).__name__}")
    return obj


def _as_list(obj: object, path: str) -> list:
    if not isinstance(obj, list):
        raise ValidationError(f"{path}: expected an array, got {type(obj).__name__}")
    return obj


def _parse_distribution(obj: object, path: str) -> Distribution:
    d = _as_dict(obj, path)
    kind = d.get("kind")
    if kind == "exponential":
        _require_keys(d, {"kind", "rate"}, {"kind", "rate"}, path)
        return Distribution.exponential(_num(d["rate"], f"{path}.rate"))
    if kind == "deterministic":
        _require_keys(d, {"kind", "value"}, {"kind", "value"}, path)
        return Distribution.deterministic(_num(d["value"], f"{path}.value"))
    if kind == "uniform":
        _require_keys(d, {"kind", "lo", "hi"}, {"kind", "lo", "hi"}, path)
        return Distribution.uniform(_num(d["lo"], f"{path}.lo"), _num(d["hi"], f"{path}.hi"))
    raise ValidationError(f"{path}.kind: unknown distribution kind {kind!r}")


def _num(obj: object, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {obj!r}")
    return float(obj)


def _int(obj: object, path: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise ValidationError(f"{path}: expected an integer, got {obj!r}")
    return obj


def _str(obj: object, path: str) -> str:
    if not isinstance(obj, str):
        raise ValidationError(f"{path}: expected a string, got {obj!r}")
    return obj


def _parse_capacity(obj: object, path: str) -> int | float:
    if obj == "inf":
        return INFINITE
    return _int(obj, path)


def _parse_resource(obj: object, path: str) -> ResourceSpec:
    d = _as_dict(obj, path)
    _require_keys(d, {"name", "replicas", "queue_capacity", "discipline", "balancer"}, {"name"}, path)
    try:
        discipline = Discipline(d.get("discipline", "fcfs"))
    except ValueError:
        raise ValidationError(f"{path}.discipline: unknown discipline {d['discipline']!r}") from None
    try:
        balancer = BalancerPolicy(d.get("balancer", "jsq"))
    except ValueError:
        raise ValidationError(f"{path}.balancer: unknown balancer policy {d['balancer']!r}") from None
    return ResourceSpec(
        name=_str(d["name"], f"{path}.name"),
        replicas=_int(d.get("replicas", 1), f"{path}.replicas"),
        queue_capacity=_parse_capacity(d.get("queue_capacity", "inf"), f"{path}.queue_capacity"),
        discipline=discipline,
        balancer=balancer,
    )


def _parse_stop(obj: object, path: str) -> StopRule:
    d = _as_dict(obj, path)
    kind = d.get("kind")
    if kind == "after_requests":
        _require_keys(d, {"kind", "n"}, {"kind", "n"}, path)
        return StopRule.after_requests(_int(d["n"], f"{path}.n"))
    if kind == "after_time":
        _require_keys(d, {"kind", "t"}, {"kind", "t"}, path)
        return StopRule.after_time(_num(d["t"], f"{path}.t"))
    raise ValidationError(f"{path}.kind: unknown stop kind {kind!r}")


def parse_scenario(text: str) -> ScenarioModel:
    """Parse and fully validate a scenario JSON document.

    Raises ScenarioSyntaxError for malformed JSON (with position) and
    ValidationError for schema or invariant violations.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from None

    top = _as_dict(raw, "$")
    _require_keys(top, {"format_version", "name", "tiers", "classes", "run"}, {"name", "tiers", "classes", "run"}, "$")
    version = top.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ValidationError(f"$.format_version: unsupported version {version!r} (this build reads {FORMAT_VERSION})")

    tiers = []
    for ti, tobj in enumerate(_as_list(top["tiers"], "$.tiers")):
        tpath = f"$.tiers[{ti}]"
        td = _as_dict(tobj, tpath)
        _require_keys(td, {"name", "resources"}, {"name", "resources"}, tpath)
        resources = tuple(
            _parse_resource(robj, f"{tpath}.resources[{ri}]")
            for ri, robj in enumerate(_as_list(td["resources"], f"{tpath}.resources"))
        )
        tiers.append(Tier(name=_str(td["name"], f"{tpath}.name"), resources=resources))

    classes = []
    for ci, cobj in enumerate(_as_list(top["classes"], "$.classes")):
        cpath = f"$.classes[{ci}]"
        cd = _as_dict(cobj, cpath)
        _require_keys(cd, {"name", "arrival", "path", "max_requests"}, {"name", "arrival", "path"}, cpath)
        visits = []
        for vi, vobj in enumerate(_as_list(cd["path"], f"{cpath}.path")):
            vpath = f"{cpath}.path[{vi}]"
            vd = _as_dict(vobj, vpath)
            _require_keys(vd, {"resource", "demand"}, {"resource", "demand"}, vpath)
            visits.append(
                Visit(resource=_str(vd["resource"], f"{vpath}.resource"), demand=_parse_distribution(vd["demand"], f"{vpath}.demand"))
            )
        mr_raw = cd.get("max_requests", "unbounded")
        max_requests = UNBOUNDED if mr_raw == "unbounded" else _int(mr_raw, f"{cpath}.max_requests")
        classes.append(
            WorkloadClass(
                name=_str(cd["name"], f"{cpath}.name"),
                arrival=_parse_distribution(cd["arrival"], f"{cpath}.arrival"),
                path=tuple(visits),
                max_requests=max_requests,
            )
        )

    rd = _as_dict(top["run"], "$.run")
    _require_keys(rd, {"seed", "stop", "warmup", "series"}, {"stop"}, "$.run")
    run = RunConfig(
        seed=_int(rd.get("seed", 1), "$.run.seed"),
        stop=_parse_stop(rd["stop"], "$.run.stop"),
        warmup=_num(rd.get("warmup", 0.0), "$.run.warmup"),
        series_enabled=bool(rd.get("series", False)),
    )

    model = ScenarioModel(name=_str(top["name"], "$.name"), tiers=tuple(tiers), classes=tuple(classes), run=run)
    report = validate(model)
    if not report.ok:
        raise ValidationError(str(report))
    return model


def _dist_to_json(dist: Distribution) -> dict:
    if dist.kind is DistKind.EXPONENTIAL:
        return {"kind": "exponential", "rate": dist.rate}
    if dist.kind is DistKind.DETERMINISTIC:
        return {"kind": "deterministic", "value": dist.value}
    return {"kind": "uniform", "lo": dist.lo, "hi": dist.hi}


def serialize_scenario(model: ScenarioModel) -> str:
    """Render a model back to scenario JSON.

    Round-trips exactly: ``parse_scenario(serialize_scenario(m)) == m``.
    """
    doc = {
        "format_version": FORMAT_VERSION,
        "name": model.name,
        "tiers": [
            {
                "name": tier.name,
                "resources": [
                    {
                        "name": r.name,
                        "replicas": r.replicas,
                        "queue_capacity": "inf" if r.queue_capacity == INFINITE else r.queue_capacity,
                        "discipline": r.discipline.value,
                        "balancer": r.balancer.value,
                    }
                    for r in tier.resources
                ],
            }
            for tier in model.tiers
        ],
        "classes": [
            {
                "name": cls.name,
                "arrival": _dist_to_json(cls.arrival),
                "path": [{"resource": v.resource, "demand": _dist_to_json(v.demand)} for v in cls.path],
                "max_requests": "unbounded" if cls.max_requests == UNBOUNDED else cls.max_requests,
            }
            for cls in model.classes
        ],
        "run": {
            "seed": model.run.seed,
            "stop": (
                {"kind": "after_requests", "n": model.run.stop.n}
                if model.run.stop.kind is StopKind.AFTER_REQUESTS
                else {"kind": "after_time", "t": model.run.stop.t}
            ),
            "warmup": model.run.warmup,
            "series": model.run.series_enabled,
        },
    }
    return json.dumps(doc, indent=2) + "\n"
