"""Core package for the relu_cert project."""
