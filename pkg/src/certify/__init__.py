"""Binary-search drivers that turn bounds into certificates."""
