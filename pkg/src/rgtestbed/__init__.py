"""A testbed for multiagent learning algorithms in repeated two-player games."""

__version__ = "0.1.0"
