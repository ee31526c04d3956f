"""Model builders: three-state model, rate models, output expansion and binning."""
