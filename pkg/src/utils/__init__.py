"""
Utility functions.

Errors, logging, environment helpers, progress bars and the worker pool.
"""
