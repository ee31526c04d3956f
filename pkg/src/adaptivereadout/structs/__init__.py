"""Data structures: permutations, action sets and output partitions."""
