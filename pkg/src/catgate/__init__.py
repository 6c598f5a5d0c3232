"""catgate - hybrid photonic/cat-state controlled-phase gate simulator."""

__version__ = "1.0.0a0"
