"""Trace the spread of an image through reverse image search, social media and web archives."""

__version__ = "0.1.0"
