"""Network representation and evaluation."""
