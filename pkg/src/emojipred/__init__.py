"""Emoji prediction for tweets."""

__version__ = "0.1.0"
