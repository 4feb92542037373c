"""Exact toric fan combinatorics, sortedness, convex subdivisions and logarithmic forms."""

from .cones import Cone, ConeError
from .fans import Fan, FanError, FanQuadruple, FanTriple, TorusDivisor, fan_triple, fan_validate, restrict
from .io import FanFile, SchemaError, load_fan_file, load_fixture
from .linalg import Subspace

__version__ = "0.1.0"

__all__ = [
    "Cone",
    "ConeError",
    "Fan",
    "FanError",
    "FanFile",
    "FanQuadruple",
    "FanTriple",
    "SchemaError",
    "Subspace",
    "TorusDivisor",
    "fan_triple",
    "fan_validate",
    "load_fan_file",
    "load_fixture",
    "restrict",
]
