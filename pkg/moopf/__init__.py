"""Multi-objective optimal power flow lab for radial distribution feeders."""

__version__ = "0.1.0"

__all__ = ["__version__"]
