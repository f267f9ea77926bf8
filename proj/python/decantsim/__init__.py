"""Python front end for the decant simulator core."""

import csv
import io
import json

from . import _core
from ._core import (
    InfeasibleError,
    NonFiniteError,
    ParseError,
    learning_rate,
    path_loss_db,
    spectral_efficiency,
    tier_waiting_times,
)

__all__ = [
    "InfeasibleError",
    "NonFiniteError",
    "ParseError",
    "learning_rate",
    "normalize_config",
    "path_loss_db",
    "plan",
    "scenario",
    "simulate",
    "spectral_efficiency",
    "tier_waiting_times",
]


def normalize_config(config):
    """Validated run configuration with every default filled in."""
    return json.loads(_core.normalize_config(json.dumps(config)))


def plan(config):
    """Tier plan and workloads for a run configuration."""
    return json.loads(_core.plan(json.dumps(config)))


def scenario(config):
    """Client positions and hardware for a scenario configuration."""
    return json.loads(_core.scenario(json.dumps(config)))


def simulate(config, targets=()):
    """Runs one configuration. Returns (rows, summary): metrics rows as dicts and the run summary."""
    out = _core.simulate(json.dumps(config), list(targets))
    rows = list(csv.DictReader(io.StringIO(out["csv"])))
    return rows, json.loads(out["summary"])
