"""Exception types shared across the simulator.

Every error carries a short machine-readable ``code`` so the bridge can
surface it to clients without string matching.
"""
from __future__ import annotations


class SimError(Exception):
    code = "sim_error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class MapFormatError(SimError):
    """Malformed or unsupported map document."""

    code = "map_format"


class MapValidationError(SimError):
    """Map failed invariant validation."""

    code = "map_invalid"

    def __init__(self, violations):
        self.violations = list(violations)
        summary = "; ".join(str(v) for v in self.violations[:5])
        super().__init__(f"map validation failed: {summary}")


class UnknownElementError(SimError):
    """Lookup of a lane/agent/signal id that does not exist."""

    code = "unknown_element"


class SceneError(SimError):
    """Malformed scene descriptor or impossible spawn."""

    code = "scene_error"


class ConfigError(SimError):
    """Invalid sensor or run configuration; message is path-precise."""

    code = "config_error"


class SnapshotError(SimError):
    """Corrupt or version-mismatched snapshot payload."""

    code = "snapshot_error"


class BridgeProtocolError(SimError):
    """Malformed bridge frame."""

    code = "bad_frame"
