"""Quasi-geodesic fans, cones and coarse boundaries of discrete metric spaces."""

from .space import Space, SpaceError, build_space, check_metric
from .qgeo import QuasiGeodesic, Ray, validate, enumerate_fan, count_fan, cone

__all__ = [
    "Space", "SpaceError", "build_space", "check_metric",
    "QuasiGeodesic", "Ray", "validate", "enumerate_fan", "count_fan", "cone",
]
__version__ = "0.1.0"
