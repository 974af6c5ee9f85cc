"""Design-stage inputs: turn a message-flow script plus a deployment map
into a runnable scenario.

The execution structure is a plain-text script, one interaction per
line:

    requester -> broker : find service [exp 12.5] @disk

``from -> to : label [dist params...]`` with an optional trailing
``@disk``. Distributions are ``exp RATE``, ``det VALUE`` or
``uniform LO HI``. ``#`` starts a comment.

The deployment map is JSON binding each participant to a node, listing
each node's resources (the first entry is the node's processor, any
further entries are its disks), and naming the network resource that
carries traffic between each pair of nodes.

Synthesis walks the steps in order. A step whose endpoints sit on
different nodes first visits the connecting network resource; every step
then visits the target node's processor, and with ``@disk`` also each of
the target's disks. Each visit draws its demand from the step's
distribution. The result is an ordinary scenario model: one tier per
node, one ``network`` tier for the links, one open workload class
walking the synthesized path.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ScenarioSyntaxError, ValidationError
from .model import (
    UNBOUNDED,
    BalancerPolicy,
    Distribution,
    ResourceSpec,
    RunConfig,
    ScenarioModel,
    Tier,
    Visit,
    WorkloadClass,
    validate,
)

_STEP_RE = re.compile(
    r"^(?P<src>[A-Za-z_][\w.-]*)\s*->\s*(?P<dst>[A-Za-z_][\w.-]*)\s*:\s*"
    r"(?P<label>[^\[\]@]+?)\s*\[(?P<dist>[^\[\]]+)\]\s*(?P<disk>@disk)?\s*$"
)


@dataclass(frozen=True)
class Step:
    source: str
    target: str
    label: str
    demand: Distribution
    disk: bool = False


@dataclass(frozen=True)
class ExecutionStructure:
    steps: tuple[Step, ...]

    def participants(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for step in self.steps:
            seen.setdefault(step.source)
            seen.setdefault(step.target)
        return tuple(seen)


@dataclass(frozen=True)
class DeploymentMap:
    bindings: dict[str, str]
    nodes: dict[str, tuple[ResourceSpec, ...]]
    links: dict[tuple[str, str], ResourceSpec]

    def link_between(self, a: str, b: str) -> ResourceSpec | None:
        return self.links.get((a, b) if a <= b else (b, a))


def _parse_demand(text: str, line_no: int) -> Distribution:
    tokens = text.split()
    if not tokens:
        raise ScenarioSyntaxError("empty demand bracket", line=line_no)
    kind, args = tokens[0], tokens[1:]
    try:
        values = [float(a) for a in args]
    except ValueError:
        raise ScenarioSyntaxError(f"demand parameters must be numbers, got {args!r}", line=line_no) from None
    if kind == "exp" and len(values) == 1:
        return Distribution.exponential(values[0])
    if kind == "det" and len(values) == 1:
        return Distribution.deterministic(values[0])
    if kind == "uniform" and len(values) == 2:
        return Distribution.uniform(values[0], values[1])
    raise ScenarioSyntaxError(
        f"bad demand {text!r} (expected 'exp RATE', 'det VALUE' or 'uniform LO HI')", line=line_no
    )


def parse_execution(text: str) -> ExecutionStructure:
    """Parse the step script. Unparseable lines report their number."""
    steps: list[Step] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _STEP_RE.match(line)
        if not m:
            raise ScenarioSyntaxError(
                f"cannot parse step {line!r} (expected 'from -> to : label [dist params] [@disk]')",
                line=line_no,
            )
        steps.append(
            Step(
                source=m.group("src"),
                target=m.group("dst"),
                label=m.group("label").strip(),
                demand=_parse_demand(m.group("dist"), line_no),
                disk=m.group("disk") is not None,
            )
        )
    if not steps:
        raise ValidationError("execution structure holds no steps")
    return ExecutionStructure(steps=tuple(steps))


def _parse_resource_entry(obj: object, path: str) -> ResourceSpec:
    if isinstance(obj, str):
        return ResourceSpec(name=obj)
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: expected a resource name or object, got {type(obj).__name__}")
    allowed = {"name", "replicas", "queue_capacity", "balancer"}
    for key in obj:
        if key not in allowed:
            raise ValidationError(f"{path}: unknown key {key!r}")
    if "name" not in obj:
        raise ValidationError(f"{path}: resource object needs a name")
    cap = obj.get("queue_capacity", "inf")
    try:
        balancer = BalancerPolicy(obj.get("balancer", "jsq"))
    except ValueError:
        raise ValidationError(f"{path}: unknown balancer policy {obj['balancer']!r}") from None
    return ResourceSpec(
        name=obj["name"],
        replicas=obj.get("replicas", 1),
        queue_capacity=float("inf") if cap == "inf" else cap,
        balancer=balancer,
    )


def parse_deployment(text: str) -> DeploymentMap:
    """Parse and cross-check the deployment JSON."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from None
    if not isinstance(raw, dict):
        raise ValidationError("deployment document must be a JSON object")
    for key in raw:
        if key not in {"bindings", "nodes", "links"}:
            raise ValidationError(f"deployment: unknown key {key!r}")
    for key in ("bindings", "nodes"):
        if key not in raw:
            raise ValidationError(f"deployment: missing required key {key!r}")

    nodes_raw = raw["nodes"]
    if not isinstance(nodes_raw, dict) or not nodes_raw:
        raise ValidationError("deployment.nodes must be a non-empty object")
    nodes: dict[str, tuple[ResourceSpec, ...]] = {}
    seen_resource: dict[str, str] = {}
    for node, entries in nodes_raw.items():
        if not isinstance(entries, list) or not entries:
            raise ValidationError(f"deployment.nodes[{node!r}]: a node needs at least one resource")
        specs = tuple(_parse_resource_entry(e, f"deployment.nodes[{node!r}][{i}]") for i, e in enumerate(entries))
        for spec in specs:
            if spec.name in seen_resource:
                raise ValidationError(
                    f"deployment: resource {spec.name!r} declared on both {seen_resource[spec.name]!r} and {node!r}"
                )
            seen_resource[spec.name] = node
        nodes[node] = specs

    bindings_raw = raw["bindings"]
    if not isinstance(bindings_raw, dict) or not bindings_raw:
        raise ValidationError("deployment.bindings must be a non-empty object")
    for participant, node in bindings_raw.items():
        if node not in nodes:
            raise ValidationError(f"deployment.bindings[{participant!r}]: participant bound to undeclared node {node!r}")

    links: dict[tuple[str, str], ResourceSpec] = {}
    link_specs: dict[str, ResourceSpec] = {}
    for i, entry in enumerate(raw.get("links", [])):
        path = f"deployment.links[{i}]"
        if not isinstance(entry, dict) or set(entry) != {"between", "resource"}:
            raise ValidationError(f"{path}: expected an object with keys 'between' and 'resource'")
        between = entry["between"]
        if not (isinstance(between, list) and len(between) == 2 and all(isinstance(n, str) for n in between)):
            raise ValidationError(f"{path}.between: expected two node names")
        a, b = between
        if a == b:
            raise ValidationError(f"{path}.between: a link must join two distinct nodes, got {a!r} twice")
        for endpoint in (a, b):
            if endpoint not in nodes:
                raise ValidationError(f"{path}.between: unknown node {endpoint!r}")
        key = (a, b) if a <= b else (b, a)
        if key in links:
            raise ValidationError(f"{path}: duplicate link between {a!r} and {b!r}")
        spec = _parse_resource_entry(entry["resource"], f"{path}.resource")
        if spec.name in seen_resource:
            raise ValidationError(f"{path}: link resource {spec.name!r} collides with a node resource")
        # the same network resource may carry several node pairs, but its
        # spec must be written identically everywhere it appears
        if spec.name in link_specs and link_specs[spec.name] != spec:
            raise ValidationError(f"{path}: link resource {spec.name!r} redeclared with a different spec")
        link_specs[spec.name] = spec
        links[key] = spec

    return DeploymentMap(bindings=dict(bindings_raw), nodes=nodes, links=links)


def synthesize_scenario(
    execution: ExecutionStructure,
    deployment: DeploymentMap,
    *,
    scenario_name: str = "synthesized",
    class_name: str = "sessions",
    arrival: Distribution,
    max_requests: int | float = UNBOUNDED,
    run: RunConfig | None = None,
) -> ScenarioModel:
    """Expand the step script against the deployment into a scenario.

    The synthesized path length is exactly (cross-node steps) +
    (declared processing visits): every step contributes its target's
    processor, @disk steps add each target disk, and crossing between
    nodes adds the connecting network resource.
    """
    visits: list[Visit] = []
    for step in execution.steps:
        src_node = deployment.bindings.get(step.source)
        dst_node = deployment.bindings.get(step.target)
        if src_node is None:
            raise ValidationError(f"participant {step.source!r} has no binding in the deployment map")
        if dst_node is None:
            raise ValidationError(f"participant {step.target!r} has no binding in the deployment map")
        if src_node != dst_node:
            link = deployment.link_between(src_node, dst_node)
            if link is None:
                raise ValidationError(f"no link declared between nodes {src_node!r} and {dst_node!r}")
            visits.append(Visit(resource=link.name, demand=step.demand))
        resources = deployment.nodes[dst_node]
        visits.append(Visit(resource=resources[0].name, demand=step.demand))
        if step.disk:
            disks = resources[1:]
            if not disks:
                raise ValidationError(f"step {step.label!r} is tagged @disk but node {dst_node!r} declares no disks")
            visits.extend(Visit(resource=d.name, demand=step.demand) for d in disks)

    tiers = [Tier(name=node, resources=specs) for node, specs in deployment.nodes.items()]
    # declare every link resource, even ones no step crosses, so the
    # scenario mirrors the whole deployment; dedupe shared links by name
    all_links = tuple(dict.fromkeys(deployment.links.values()))
    if all_links:
        tiers.append(Tier(name="network", resources=all_links))

    cls = WorkloadClass(name=class_name, arrival=arrival, path=tuple(visits), max_requests=max_requests)
    model = ScenarioModel(
        name=scenario_name,
        tiers=tuple(tiers),
        classes=(cls,),
        run=run if run is not None else RunConfig(),
    )
    report = validate(model)
    if not report.ok:
        raise ValidationError(str(report))
    return model
