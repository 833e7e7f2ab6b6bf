"""Deterministic UAV flight and LTE link simulator with log comparison tools."""

__version__ = "0.1.0"
