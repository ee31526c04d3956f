"""Tests for adaptivereadout."""
