"""Software model of a planar monopulse receiver.

Transmission-line network simulation, the port-transformation rat-race
coupler and comparator, 2x2 array patterns, monopulse direction finding
and a small neural-network corrector.
"""

__version__ = "0.1.0"

from .errors import MonopulseLabError  # noqa: E402

__all__ = ["MonopulseLabError", "__version__"]
