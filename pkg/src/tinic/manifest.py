"""Run manifests and optional configuration files for the CLI."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import platform
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy

from . import __version__
from .errors import InvalidArgument


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    caps: dict
    outputs: dict = field(default_factory=dict)
    versions: dict = field(default_factory=lambda: {
        "tinic": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "scipy": scipy.__version__})
    timestamp: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())

    def record_output(self, path: str, text: str) -> None:
        self.outputs[path] = hashlib.sha256(text.encode()).hexdigest()

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_config(path: str) -> dict:
    """A JSON object whose keys mirror the long CLI flags (dashes or underscores)."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise InvalidArgument("configuration file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}
