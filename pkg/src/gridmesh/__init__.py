"""gridmesh: shared-workspace messaging plus grid topology/contour tooling."""

__version__ = "0.1.0"
