"""Angular statistics of Fuchsian group orbits in hyperbolic balls."""

__version__ = "0.1.0"
