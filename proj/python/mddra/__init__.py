"""Python bindings for the IREE-maximizing allocation simulator."""

from ._core import (
    ConfigError,
    DomainError,
    NumericError,
    ShapeError,
    __version__,
    cli,
    config_hash,
    config_json,
    csv_columns,
    iree_report,
    js_divergence,
    queue_drift_step,
    run_experiment,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NumericError",
    "ShapeError",
    "__version__",
    "cli",
    "config_hash",
    "config_json",
    "csv_columns",
    "iree_report",
    "js_divergence",
    "queue_drift_step",
    "run_experiment",
]
