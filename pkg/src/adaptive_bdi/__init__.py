"""Self-adaptive BDI agent runtime with a formal self-model of its durative actions."""

__version__ = "0.1.0"
