"""Step script + deployment map synthesis into runnable scenarios."""

from __future__ import annotations

import pytest

from tiersim import (
    DistKind,
    Distribution,
    RunConfig,
    ScenarioSyntaxError,
    StopRule,
    ValidationError,
    parse_deployment,
    parse_execution,
    parse_scenario,
    serialize_scenario,
    simulate,
    synthesize_scenario,
    validate,
)
from tiersim import bundled


def bundled_pair():
    return (
        parse_execution(bundled.execution_text()),
        parse_deployment(bundled.deployment_text()),
    )


SMALL_DEPLOYMENT = """
{
  "bindings": {"a": "n1", "b": "n1", "c": "n2"},
  "nodes": {
    "n1": ["P1", "D1"],
    "n2": ["P2"]
  },
  "links": [{"between": ["n1", "n2"], "resource": "NET"}]
}
"""


def test_parses_the_bundled_step_script():
    execution, _ = bundled_pair()
    steps = execution.steps
    assert len(steps) == 4
    assert [(s.source, s.target) for s in steps] == [
        ("requester", "broker"),
        ("broker", "requester"),
        ("requester", "provider"),
        ("provider", "requester"),
    ]
    assert steps[0].label == "discover service"
    assert [s.disk for s in steps] == [True, False, True, False]
    assert steps[0].demand == Distribution.exponential(17.5)
    assert steps[2].demand == Distribution.exponential(5.0)
    assert execution.participants() == ("requester", "broker", "provider")


def test_synthesized_path_interleaves_links_processors_and_disks():
    execution, deployment = bundled_pair()
    model = synthesize_scenario(execution, deployment, arrival=Distribution.exponential(75.0))
    path = model.classes[0].path
    assert [v.resource for v in path] == [
        "Internet1",
        "SB_CPU",
        "SB_Disk",
        "Internet1",
        "SRS_CPU",
        "Internet2",
        "SP_CPU",
        "SP_Disk",
        "Internet2",
        "SRS_CPU",
    ]
    # every visit inherits its step's demand
    rates = [v.demand.rate for v in path]
    assert rates == [17.5] * 5 + [5.0] * 5


def test_synthesized_tiers_mirror_nodes_plus_network():
    execution, deployment = bundled_pair()
    model = synthesize_scenario(execution, deployment, arrival=Distribution.exponential(75.0))
    assert [t.name for t in model.tiers] == ["client", "brokerhost", "providerhost", "network"]
    network = model.tiers[-1]
    # Internet2 carries two node pairs but appears once
    assert [r.name for r in network.resources] == ["Internet1", "Internet2"]
    assert all(r.queue_capacity == 2 for r in network.resources)
    by_name = {r.name: r for t in model.tiers for r in t.resources}
    assert by_name["SP_Disk"].queue_capacity == 1
    assert validate(model).ok


def test_synthesized_scenario_round_trips_and_runs():
    execution, deployment = bundled_pair()
    model = synthesize_scenario(
        execution,
        deployment,
        arrival=Distribution.exponential(75.0),
        max_requests=50,
        run=RunConfig(seed=3, stop=StopRule.after_requests(50)),
    )
    assert parse_scenario(serialize_scenario(model)) == model
    report = simulate(model)
    assert report.generated == 50


def test_same_node_step_crosses_no_link():
    execution = parse_execution("a -> b : local call [det 0.1]")
    model = synthesize_scenario(execution, parse_deployment(SMALL_DEPLOYMENT), arrival=Distribution.exponential(1.0))
    assert [v.resource for v in model.classes[0].path] == ["P1"]
    # the declared link still shows up so the scenario mirrors the map
    assert [t.name for t in model.tiers] == ["n1", "n2", "network"]


def test_disk_steps_visit_every_disk_of_the_target_node():
    execution = parse_execution("c -> a : store [det 0.1] @disk")
    model = synthesize_scenario(execution, parse_deployment(SMALL_DEPLOYMENT), arrival=Distribution.exponential(1.0))
    assert [v.resource for v in model.classes[0].path] == ["NET", "P1", "D1"]


def test_run_and_limits_are_plumbed_through():
    execution, deployment = bundled_pair()
    run = RunConfig(seed=9, stop=StopRule.after_time(3.0), warmup=1.0, series_enabled=True)
    model = synthesize_scenario(
        execution,
        deployment,
        scenario_name="mine",
        class_name="browsers",
        arrival=Distribution.deterministic(0.25),
        max_requests=10,
        run=run,
    )
    assert model.name == "mine"
    assert model.classes[0].name == "browsers"
    assert model.classes[0].max_requests == 10
    assert model.run == run
    default = synthesize_scenario(execution, deployment, arrival=Distribution.exponential(1.0))
    assert default.run == RunConfig()


def test_step_script_tolerates_comments_and_blank_lines():
    text = """
    # a comment

    a -> b : first [exp 2.0]   # trailing comment
    b -> a : second [uniform 0.1 0.3]
    """
    steps = parse_execution(text).steps
    assert len(steps) == 2
    assert steps[1].demand.kind is DistKind.UNIFORM


def test_unparseable_step_names_its_line():
    with pytest.raises(ScenarioSyntaxError, match="line 3"):
        parse_execution("a -> b : ok [det 1]\n\nthis is not a step\n")


def test_bad_demands_are_rejected_with_line_numbers():
    with pytest.raises(ScenarioSyntaxError, match="line 1"):
        parse_execution("a -> b : x [exp 1 2]")
    with pytest.raises(ScenarioSyntaxError):
        parse_execution("a -> b : x [gamma 1]")
    with pytest.raises(ScenarioSyntaxError):
        parse_execution("a -> b : x [det cheap]")
    with pytest.raises(ScenarioSyntaxError):
        parse_execution("a -> b : x []")


def test_empty_script_is_invalid():
    with pytest.raises(ValidationError):
        parse_execution("# only comments\n\n")


def test_deployment_strictness():
    with pytest.raises(ValidationError, match="unknown key"):
        parse_deployment('{"bindings": {}, "nodes": {"n": ["P"]}, "extra": 1}')
    with pytest.raises(ValidationError, match="missing required key"):
        parse_deployment('{"nodes": {"n": ["P"]}}')
    with pytest.raises(ValidationError, match="missing required key"):
        parse_deployment('{"bindings": {"a": "n"}}')
    with pytest.raises(ScenarioSyntaxError, match="line"):
        parse_deployment("{not json")


def test_deployment_node_and_binding_checks():
    with pytest.raises(ValidationError, match="at least one resource"):
        parse_deployment('{"bindings": {"a": "n"}, "nodes": {"n": []}}')
    with pytest.raises(ValidationError, match="declared on both"):
        parse_deployment('{"bindings": {"a": "n"}, "nodes": {"n": ["P"], "m": ["P"]}}')
    with pytest.raises(ValidationError, match="undeclared node"):
        parse_deployment('{"bindings": {"a": "ghost"}, "nodes": {"n": ["P"]}}')


def test_deployment_link_checks():
    base = '{"bindings": {"a": "n1"}, "nodes": {"n1": ["P1"], "n2": ["P2"]}, "links": %s}'
    with pytest.raises(ValidationError, match="two distinct nodes"):
        parse_deployment(base % '[{"between": ["n1", "n1"], "resource": "NET"}]')
    with pytest.raises(ValidationError, match="unknown node"):
        parse_deployment(base % '[{"between": ["n1", "ghost"], "resource": "NET"}]')
    with pytest.raises(ValidationError, match="duplicate link"):
        parse_deployment(
            base % '[{"between": ["n1", "n2"], "resource": "NET"}, {"between": ["n2", "n1"], "resource": "NET2"}]'
        )
    with pytest.raises(ValidationError, match="collides"):
        parse_deployment(base % '[{"between": ["n1", "n2"], "resource": "P1"}]')
    with pytest.raises(ValidationError, match="keys 'between' and 'resource'"):
        parse_deployment(base % '[{"between": ["n1", "n2"]}]')


def test_shared_link_resource_must_be_declared_identically():
    doc = """
    {
      "bindings": {"a": "n1"},
      "nodes": {"n1": ["P1"], "n2": ["P2"], "n3": ["P3"]},
      "links": [
        {"between": ["n1", "n2"], "resource": {"name": "NET", "queue_capacity": 2}},
        {"between": ["n2", "n3"], "resource": {"name": "NET", "queue_capacity": 3}}
      ]
    }
    """
    with pytest.raises(ValidationError, match="different spec"):
        parse_deployment(doc)


def test_resource_entry_validation():
    base = '{"bindings": {"a": "n"}, "nodes": {"n": [%s]}}'
    with pytest.raises(ValidationError, match="needs a name"):
        parse_deployment(base % '{"replicas": 2}')
    with pytest.raises(ValidationError, match="unknown key"):
        parse_deployment(base % '{"name": "P", "speed": 3}')
    with pytest.raises(ValidationError, match="unknown balancer"):
        parse_deployment(base % '{"name": "P", "balancer": "fastest"}')
    spec = parse_deployment(base % '{"name": "P", "replicas": 3, "queue_capacity": 4}').nodes["n"][0]
    assert (spec.replicas, spec.queue_capacity) == (3, 4)


def test_synthesis_requires_bindings_links_and_disks():
    deployment = parse_deployment(SMALL_DEPLOYMENT)
    with pytest.raises(ValidationError, match="no binding"):
        synthesize_scenario(
            parse_execution("ghost -> a : x [det 1]"), deployment, arrival=Distribution.exponential(1.0)
        )
    with pytest.raises(ValidationError, match="'n2'"):
        # n2 has no disks
        synthesize_scenario(
            parse_execution("a -> c : x [det 1] @disk"), deployment, arrival=Distribution.exponential(1.0)
        )

    unlinked = parse_deployment(
        '{"bindings": {"a": "n1", "c": "n2"}, "nodes": {"n1": ["P1"], "n2": ["P2"]}}'
    )
    with pytest.raises(ValidationError) as exc:
        synthesize_scenario(parse_execution("a -> c : x [det 1]"), unlinked, arrival=Distribution.exponential(1.0))
    assert "n1" in str(exc.value) and "n2" in str(exc.value)


def test_link_lookup_is_symmetric():
    deployment = parse_deployment(SMALL_DEPLOYMENT)
    assert deployment.link_between("n1", "n2").name == "NET"
    assert deployment.link_between("n2", "n1").name == "NET"
    assert deployment.link_between("n1", "n1") is None
