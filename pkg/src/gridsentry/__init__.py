"""Desk-scale dynamic security assessment for low-inertia power systems."""

__version__ = "0.1.0"

from .netmodel import Snapshot, SystemMetrics, load_snapshot, system_metrics

__all__ = [
    "Snapshot",
    "SystemMetrics",
    "load_snapshot",
    "system_metrics",
    "__version__",
]
