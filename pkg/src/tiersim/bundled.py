"""Access to the example inputs shipped inside the package."""

from __future__ import annotations

from importlib import resources

SCENARIO = "webservices.json"
EXECUTION = "webservices_steps.txt"
DEPLOYMENT = "webservices_deployment.json"


def read(name: str) -> str:
    """Return the text of one bundled data file."""
    return resources.files("tiersim.data").joinpath(name).read_text(encoding="utf-8")


def scenario_text() -> str:
    """The three-tier web-services scenario, ready to run."""
    return read(SCENARIO)


def execution_text() -> str:
    """The step script that synthesizes the web-services path."""
    return read(EXECUTION)


def deployment_text() -> str:
    """The deployment map matching the step script."""
    return read(DEPLOYMENT)
