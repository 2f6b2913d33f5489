"""p-group generation, descendant trees and arithmetic filters for tower-group searches."""

from .pcp import PcPresentation, collect, consistency_check, dumps, loads
from .fp import FpPresentation, builtin
from .cover import CoveringData, p_covering_group, p_quotient
from .descendants import immediate_descendants, is_moribund, random_children
from .filters import ArithmeticFixture, FilterVerdict, default_fixture

__version__ = "0.1.0"

__all__ = [
    "PcPresentation", "collect", "consistency_check", "dumps", "loads",
    "FpPresentation", "builtin",
    "CoveringData", "p_covering_group", "p_quotient",
    "immediate_descendants", "is_moribund", "random_children",
    "ArithmeticFixture", "FilterVerdict", "default_fixture",
]
