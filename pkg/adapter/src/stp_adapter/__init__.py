"""stp-adapter: a pair scorer speaking the pairs-in / scores-out file protocol."""

__version__ = "0.1.0"
