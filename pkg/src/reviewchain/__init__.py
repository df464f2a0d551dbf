"""Deterministic simulator and protocol library for decentralized product reviews."""

__version__ = "0.1.0"
