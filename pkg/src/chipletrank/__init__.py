"""
Chiplet placement-order ranking package
"""
__version__ = "1.0.0"

from .core import ChipletSystem, PlacementOrder, parse_system, validate_order  # noqa: E402
from .pipeline import ChipletRankPipeline  # noqa: E402

__all__ = ["ChipletSystem", "PlacementOrder", "parse_system", "validate_order", "ChipletRankPipeline"]
