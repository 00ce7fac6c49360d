"""Version information for the dimer-cff laboratory."""

__version__ = "0.1.0"
