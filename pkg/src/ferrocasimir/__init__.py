"""Casimir pressure across a ferrofluid gap between a dielectric and a coated metal."""

__version__ = "0.1.0"
