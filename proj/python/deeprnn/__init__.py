"""Python bindings for the deeprnn library.

Configs are plain ``dict[str, str]`` using the same keys as the ``.cfg`` files.
CLI-style helpers return ``(exit_code, stdout, stderr)``.
"""

import json

from ._deeprnn import (
    ConfigError,
    Model,
    NumericError,
    gradcheck,
    parameter_count,
    parameter_shapes,
    resolve_config,
    train,
)
from ._deeprnn import evaluate as _evaluate


def evaluate(checkpoint, data, chunk=1000):
    """Scores ``data`` with a trained checkpoint; returns the metric dict."""
    code, out, err = _evaluate(str(checkpoint), str(data), chunk)
    if code != 0:
        raise RuntimeError(err.strip() or f"eval exited with {code}")
    return json.loads(out)


__all__ = [
    "ConfigError",
    "Model",
    "NumericError",
    "evaluate",
    "gradcheck",
    "parameter_count",
    "parameter_shapes",
    "resolve_config",
    "train",
]
