"""Readout policies: static, look-up table and minimum-entropy."""
