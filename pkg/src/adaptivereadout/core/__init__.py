"""Core types, configuration, errors and the readout pipeline."""
