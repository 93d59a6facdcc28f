"""Second-variation stability toolkit for one-phase free boundaries on a periodic strip."""

__version__ = "0.1.0"
