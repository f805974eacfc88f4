"""Fast-Lin, Fast-Lip and baseline bound engines."""
