"""Model reduction with transformed (shifted) modes for 1-D transport problems."""

__version__ = "0.1.0"
