"""Core algorithms: forward recursion, beliefs, Bellman solver, look-ahead trees."""
