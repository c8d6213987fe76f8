"""Deductive verification of assume/assert annotations in stream specifications."""

__version__ = "0.1.0"
