"""dimer-cff: square-lattice dimer heights compared with the compactified free field."""

from __version__ import __version__

__all__ = ["__version__"]
