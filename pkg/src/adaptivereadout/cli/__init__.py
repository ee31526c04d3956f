"""Command-line interface for the adaptive readout toolkit."""

from adaptivereadout.cli.main import cli

__all__ = ["cli"]
