"""Interacting two-colour urns on directed networks."""

__version__ = "0.1.0"
