"""Certification and simulation toolkit for indirect adaptive control with a static update law."""

__version__ = "0.1.0"
