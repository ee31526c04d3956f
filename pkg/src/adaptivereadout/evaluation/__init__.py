"""Exact, histogram and Monte Carlo infidelity evaluation."""
