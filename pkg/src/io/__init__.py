"""Input and output helpers."""
