"""Cognitive-bias attacker simulation and defender-side bias sensing."""

__version__ = "0.1.0"
