"""Variance-reduction attribution for regression models.

Thin convenience layer over the compiled core: dict/JSON in, dicts out. The
run configuration schema matches the CLI's --config file.
"""

import json
from typing import Any

from ._core import (  # noqa: F401
    analytic_oracle,
    attribute_json,
    count_orderings,
    generate_synthetic,
    verify_json,
)

__all__ = [
    "analytic_oracle",
    "attribute",
    "count_orderings",
    "count_orderings_of",
    "generate_synthetic",
    "verify",
]


def count_orderings_of(dag: dict[str, Any]) -> tuple[int, int]:
    """(admissible orderings, distinct nonempty prefixes) of a DAG dict."""
    return tuple(count_orderings(json.dumps(dag)))


def attribute(config: dict[str, Any]) -> list[dict[str, Any]]:
    """Run the ordered attribution pipeline; one report dict per mode."""
    return json.loads(attribute_json(json.dumps(config)))


def verify(config: dict[str, Any]) -> list[dict[str, Any]]:
    """Run the built-in identity and bound checks; a list of verdict dicts."""
    return json.loads(verify_json(json.dumps(config)))
