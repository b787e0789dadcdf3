"""
Seeded generator of synthetic chiplet systems
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .core import Chiplet, ChipletSystem, Interposer, canonical_nets
from .errors import DataError
from .placer import PlacerConfig, unplaceable_order

logger = logging.getLogger(__name__)

EXACT_CHECK_CHIPLETS = 6


@dataclass(frozen=True)
class Profile:
    power_w: tuple = (0.1, 0.9)
    size_mm: tuple = (3.0, 10.0)
    wires: tuple = (10, 300)
    edge_probability: float = 0.5
    fill: tuple = (0.25, 0.35)


PROFILES: Dict[str, Profile] = {
    'mixed': Profile(),
    'hot': Profile(power_w=(0.4, 1.2)),
    'dense': Profile(edge_probability=0.8),
    'sparse': Profile(edge_probability=0.3, wires=(20, 400)),
}


def tiling_side(largest_mm: float, n_chiplets: int, config: Optional[PlacerConfig] = None) -> float:
    """
    Smallest square side (mm) on which every order of n chiplets no wider than largest_mm places.

    Tiles as wide as the largest footprint (plus spacing on both sides) each hold any chiplet;
    a placed chiplet overlaps at most 4 of them, so more than 4 (n - 1) tiles leave one free.
    """
    config = config or PlacerConfig()
    per_side = math.isqrt(4 * (n_chiplets - 1)) + 1
    cells = config.grid // per_side - 2 * config.spacing
    if cells < 1:
        raise DataError(f"a {config.grid}-cell placer grid cannot guarantee {n_chiplets} chiplets")
    return largest_mm * config.grid / cells


def fit_interposer(name: str, chiplets, nets, side: float, ambient: float,
                   config: Optional[PlacerConfig] = None) -> ChipletSystem:
    """
    Grow a square interposer from `side` in 1 mm steps until every placement order places.

    Up to EXACT_CHECK_CHIPLETS the check walks every order; beyond it the side jumps to the tiling bound.
    """
    config = config or PlacerConfig()
    largest = max(max(c.width, c.length) for c in chiplets)
    bound = tiling_side(largest, len(chiplets), config)

    def build(s: float) -> ChipletSystem:
        return ChipletSystem(name=name, interposer=Interposer(width=s, height=s, ambient=ambient),
                             chiplets=tuple(chiplets), nets=nets)

    if len(chiplets) > EXACT_CHECK_CHIPLETS:
        return build(max(side, math.ceil(bound)))
    while side < bound:
        system = build(side)
        stuck = unplaceable_order(system, config)
        if stuck is None:
            return system
        logger.debug(f"System '{name}': order {stuck} does not place on {side:g} mm; growing")
        side += 1.0
    return build(side)


def generate_system(name: str, n_chiplets: int = 6, seed: int = 42, profile: str = 'mixed',
                    ambient: float = 45.0) -> ChipletSystem:
    """
    Random valid system: chiplet sizes/powers and net wire counts drawn from the profile ranges,
    a spanning chain so every chiplet is connected, and a square interposer sized so the
    chiplets fill 25-35 % of it, then grown until every placement order places.
    """
    if profile not in PROFILES:
        raise DataError(f"profile must be one of {sorted(PROFILES)}, got '{profile}'")
    if n_chiplets < 1:
        raise DataError(f"n_chiplets must be >= 1, got {n_chiplets}")
    shape = PROFILES[profile]
    rng = np.random.default_rng(seed)

    chiplets = []
    for i in range(n_chiplets):
        width, length = np.round(rng.uniform(*shape.size_mm, size=2), 1)
        power = round(float(rng.uniform(*shape.power_w)), 3)
        chiplets.append(Chiplet(name=f'{name}_c{i}', width=float(width), length=float(length), power=power))

    raw = []
    perm = rng.permutation(n_chiplets)
    for a, b in zip(perm[:-1], perm[1:]):
        raw.append((int(a), int(b), int(rng.integers(shape.wires[0], shape.wires[1] + 1))))
    for a in range(n_chiplets):
        for b in range(a + 1, n_chiplets):
            if rng.random() < shape.edge_probability:
                raw.append((a, b, int(rng.integers(shape.wires[0], shape.wires[1] + 1))))

    total_area = sum(c.area for c in chiplets)
    fill = rng.uniform(*shape.fill)
    largest = max(max(c.width, c.length) for c in chiplets)
    side = max(math.ceil(2 * math.sqrt(total_area / fill)) / 2, 2 * largest + 1)
    return fit_interposer(name, chiplets, canonical_nets(raw), side, ambient)
