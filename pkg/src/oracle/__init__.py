"""Independent validation oracles."""
