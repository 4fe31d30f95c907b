"""Path-traced study of a glass orb in front of a relief."""

__version__ = "0.1.0"
