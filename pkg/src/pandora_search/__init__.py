"""Approximately optimal probing strategies for search with correlated costs."""
