"""Dense vector and matrix norms."""
