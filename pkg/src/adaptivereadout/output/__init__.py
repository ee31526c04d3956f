"""Output: JSON/CSV serialization, POMDP export and the .pomdp text format."""
