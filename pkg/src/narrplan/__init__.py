"""Narrative planning engine, task generators and evaluation harness."""

__version__ = "0.1.0"
