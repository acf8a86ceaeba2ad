"""Simulate oracle query machines and check hybrid-argument bounds for iterated black boxes."""

__version__ = "0.1.0"
