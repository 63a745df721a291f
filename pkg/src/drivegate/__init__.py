"""Workbench for backdoor-gating attacks on a neural differential-drive controller."""

__version__ = "0.1.0"
