"""QMWF-LM: sentence representation by projecting a CP-decomposed global tensor onto a product state."""

__version__ = "0.1.0"
