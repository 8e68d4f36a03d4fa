"""avsim: headless deterministic autonomous-driving simulation core."""

__version__ = "0.1.0"

DEFAULT_FIXED_DT = 0.01
DEFAULT_BRIDGE_PORT = 8181
