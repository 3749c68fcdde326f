"""Knowledge-graph toolkit for cyber-attack impact analysis on behind-the-meter infrastructure."""

__version__ = "0.1.0"
