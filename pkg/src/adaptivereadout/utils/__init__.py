"""Utility functions: seeded random numbers."""
