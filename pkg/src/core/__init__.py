"""
Core snnsim functionality.

Fixed-point arithmetic, spike encoding, the bit-accurate engine, run
configuration and the CLI.
"""
