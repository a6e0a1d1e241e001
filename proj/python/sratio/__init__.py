"""Sample reweighting of simple classifiers from graded complex models."""

import json
import os

from ._core import *  # noqa: F401,F403
from ._core import (
    ConfigError,
    DataError,
    FitError,
    __version__,
    _config_hash,
    _run_benchmark,
)


def _config_text(config):
    if isinstance(config, (str, os.PathLike)) and os.path.exists(config):
        with open(config) as fh:
            return fh.read(), os.path.dirname(os.path.abspath(config))
    if isinstance(config, dict):
        return json.dumps(config), ""
    raise ConfigError(f"config must be a dict or an existing file path, got {config!r}")


def run_benchmark(config, threads=0):
    """Run the benchmark for a config dict or JSON file. Returns (report, failures)."""
    text, base = _config_text(config)
    doc, failures = _run_benchmark(text, base, threads)
    return json.loads(doc), failures


def config_hash(config):
    text, _ = _config_text(config)
    return _config_hash(text)
