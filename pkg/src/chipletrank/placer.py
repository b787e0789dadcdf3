"""
Deterministic order-sensitive sequential placer with wirelength and thermal-proxy evaluation

A (system, order) pair becomes one ScatterPoint (peak temperature, total wirelength).
"""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import ChipletSystem, PlacementOrder, validate_order
from .errors import InvalidSystem, TooManyOrders, Unplaceable

logger = logging.getLogger(__name__)

MAX_ENUMERABLE = 8
_ROUND = 9


@dataclass(frozen=True)
class PlacerConfig:
    grid: int = 64
    spacing: int = 0

    def __post_init__(self):
        if self.grid < 1:
            raise InvalidSystem(f"placer grid must be >= 1, got {self.grid}")
        if self.spacing < 0:
            raise InvalidSystem(f"placer spacing must be >= 0, got {self.spacing}")


@dataclass(frozen=True)
class ThermalConfig:
    grid: int = 32
    kappa: float = 40.0
    sigma0: float = 1.0

    def __post_init__(self):
        if self.grid < 8:
            raise InvalidSystem(f"thermal grid must be >= 8, got {self.grid}")
        if not self.kappa > 0:
            raise InvalidSystem(f"thermal kappa must be > 0, got {self.kappa}")
        if not self.sigma0 > 0:
            raise InvalidSystem(f"thermal sigma0 must be > 0, got {self.sigma0}")


@dataclass(frozen=True)
class SampledOrders:
    """Draw up to max_orders distinct random permutations with a seeded RNG"""
    max_orders: int
    seed: int = 42


OrderSource = Union[str, Sequence[PlacementOrder], SampledOrders]


@dataclass(frozen=True)
class Placement:
    """
    Lower-left grid cells (col, row) and footprints (cells) per chiplet, plus centers in mm
    """
    cells: np.ndarray
    footprints: np.ndarray
    centers: np.ndarray
    grid: int
    spacing: int

    def violations(self) -> List[str]:
        """Every out-of-bounds chiplet and every overlapping pair; empty when the placement is legal"""
        problems = []
        n = len(self.cells)
        for i in range(n):
            (c, r), (fw, fh) = self.cells[i], self.footprints[i]
            if c < 0 or r < 0 or c + fw > self.grid or r + fh > self.grid:
                problems.append(f"chiplet {i} out of bounds at cell ({c},{r})")
        s = self.spacing
        for i, j in itertools.combinations(range(n), 2):
            (ci, ri), (fwi, fhi) = self.cells[i], self.footprints[i]
            (cj, rj), (fwj, fhj) = self.cells[j], self.footprints[j]
            if ci < cj + fwj + s and cj < ci + fwi + s and ri < rj + fhj + s and rj < ri + fhi + s:
                problems.append(f"chiplets {i} and {j} overlap")
        return problems

    def is_legal(self) -> bool:
        return not self.violations()


@dataclass(frozen=True)
class ScatterPoint:
    order: PlacementOrder
    temperature: float
    wirelength: float


@dataclass(frozen=True)
class ScatterSet:
    """Sweep outcome for one system, sorted lexicographically by order"""
    system_name: str
    points: Tuple[ScatterPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def orders(self) -> List[PlacementOrder]:
        return [p.order for p in self.points]

    @property
    def temperatures(self) -> np.ndarray:
        return np.array([p.temperature for p in self.points], dtype=np.float64)

    @property
    def wirelengths(self) -> np.ndarray:
        return np.array([p.wirelength for p in self.points], dtype=np.float64)

    def statistics(self) -> Dict[str, float]:
        """Order-sensitivity summary of the sweep"""
        t, wl = self.temperatures, self.wirelengths
        return {
            'points': len(self),
            'temperature_min': float(t.min()),
            'temperature_max': float(t.max()),
            'temperature_mean': float(t.mean()),
            'temperature_std': float(t.std()),
            'wirelength_min': float(wl.min()),
            'wirelength_max': float(wl.max()),
            'wirelength_mean': float(wl.mean()),
            'wirelength_std': float(wl.std()),
            'distinct_outcomes': len({(round(p.temperature, 6), round(p.wirelength, 6)) for p in self.points}),
        }


def _footprints(system: ChipletSystem, config: PlacerConfig) -> Tuple[np.ndarray, float, float]:
    cell_w = system.interposer.width / config.grid
    cell_h = system.interposer.height / config.grid
    fp = np.array([
        (math.ceil(c.width / cell_w - 1e-9), math.ceil(c.length / cell_h - 1e-9))
        for c in system.chiplets
    ], dtype=np.int64)
    return fp, cell_w, cell_h


class _Floor:
    """Grid occupancy and chiplet centers while an order is being placed"""

    def __init__(self, system: ChipletSystem, config: PlacerConfig):
        self.system = system
        self.config = config
        self.footprints, self.cell_w, self.cell_h = _footprints(system, config)
        g = config.grid
        too_big = [i for i, (fw, fh) in enumerate(self.footprints) if fw > g or fh > g]
        if too_big:
            raise Unplaceable(f"chiplets {too_big} do not fit on a {g}x{g} grid")
        self.wires = system.wire_matrix
        self.occupied = np.zeros((g, g), dtype=np.int64)
        self.cells = np.zeros((system.n, 2), dtype=np.int64)
        self.centers = np.zeros((system.n, 2), dtype=np.float64)
        self.placed: List[int] = []

    def copy(self) -> '_Floor':
        twin = object.__new__(_Floor)
        twin.__dict__.update(self.__dict__)
        twin.occupied = self.occupied.copy()
        twin.cells = self.cells.copy()
        twin.centers = self.centers.copy()
        twin.placed = list(self.placed)
        return twin

    def place(self, c: int) -> bool:
        """Put chiplet c on its best legal cell; False when no legal cell remains"""
        g, s = self.config.grid, self.config.spacing
        fw, fh = self.footprints[c]
        chip = self.system.chiplets[c]
        W, H = self.system.interposer.width, self.system.interposer.height
        rows, cols = np.meshgrid(np.arange(g - fh + 1), np.arange(g - fw + 1), indexing='ij')
        rows, cols = rows.ravel(), cols.ravel()

        # summed-area table answers "any occupied cell in the spacing-inflated window" per candidate
        sat = np.zeros((g + 1, g + 1), dtype=np.int64)
        sat[1:, 1:] = self.occupied.cumsum(0).cumsum(1)
        r0 = np.maximum(rows - s, 0)
        r1 = np.minimum(rows + fh + s, g)
        c0 = np.maximum(cols - s, 0)
        c1 = np.minimum(cols + fw + s, g)
        legal = (sat[r1, c1] - sat[r0, c1] - sat[r1, c0] + sat[r0, c0]) == 0
        if not legal.any():
            return False
        rows, cols = rows[legal], cols[legal]
        cx = cols * self.cell_w + chip.width / 2
        cy = rows * self.cell_h + chip.length / 2
        to_center = np.abs(cx - W / 2) + np.abs(cy - H / 2)

        neighbors = [u for u in self.placed if self.wires[c, u] > 0]
        if not self.placed:
            cost = to_center
        elif neighbors:
            cost = np.zeros_like(cx)
            for u in neighbors:
                cost += self.wires[c, u] * (np.abs(cx - self.centers[u, 0]) + np.abs(cy - self.centers[u, 1]))
        else:
            centroid = self.centers[self.placed].mean(axis=0)
            cost = np.abs(cx - centroid[0]) + np.abs(cy - centroid[1])

        best = np.lexsort((cols, rows, np.round(to_center, _ROUND), np.round(cost, _ROUND)))[0]
        r, col = rows[best], cols[best]
        self.occupied[r:r + fh, col:col + fw] = 1
        self.cells[c] = (col, r)
        self.centers[c] = (cx[best], cy[best])
        self.placed.append(c)
        return True


def place_sequential(system: ChipletSystem, order, config: Optional[PlacerConfig] = None) -> Placement:
    """
    Place chiplets one at a time in the given order.

    The first chiplet goes to the grid center. Every later chiplet takes the legal cell that
    minimizes wire-weighted Manhattan distance to its already-placed neighbors (or, without
    placed neighbors, distance to the centroid of placed centers). Ties go to the cell
    closest to the grid center, then to the first cell in row-major order.
    """
    config = config or PlacerConfig()
    order = validate_order(system, order)
    floor = _Floor(system, config)
    for step, c in enumerate(order.sequence):
        if not floor.place(c):
            raise Unplaceable(
                f"system '{system.name}', order {order}: no legal position for chiplet {c} at step {step + 1}"
            )
    return Placement(cells=floor.cells, footprints=floor.footprints, centers=floor.centers,
                     grid=config.grid, spacing=config.spacing)


def unplaceable_order(system: ChipletSystem, config: Optional[PlacerConfig] = None,
                      cap: int = MAX_ENUMERABLE) -> Optional[PlacementOrder]:
    """
    First order (lexicographically) that cannot be fully placed, or None when every order places.

    Walks the tree of order prefixes depth first so orders sharing a prefix share its placement.
    """
    config = config or PlacerConfig()
    if system.n > cap:
        raise TooManyOrders(f"system '{system.name}' has {system.n} chiplets; exhaustive checks are capped at n <= {cap}")

    def walk(floor: _Floor, prefix: Tuple[int, ...]) -> Optional[Tuple[int, ...]]:
        remaining = [c for c in range(system.n) if c not in prefix]
        for c in remaining:
            child = floor.copy() if len(remaining) > 1 else floor
            if not child.place(c):
                rest = tuple(sorted(set(remaining) - {c}))
                return prefix + (c,) + rest
            if len(remaining) > 1:
                found = walk(child, prefix + (c,))
                if found is not None:
                    return found
        return None

    stuck = walk(_Floor(system, config), ())
    return None if stuck is None else PlacementOrder(stuck)


def total_wirelength(system: ChipletSystem, placement: Placement) -> float:
    """Sum over nets of wires x center-to-center Manhattan distance (mm)"""
    total = 0.0
    for net in system.nets:
        dx, dy = np.abs(placement.centers[net.a] - placement.centers[net.b])
        total += net.wires * (dx + dy)
    return float(total)


def thermal_map(system: ChipletSystem, placement: Placement, config: Optional[ThermalConfig] = None) -> np.ndarray:
    """Temperature at the cell centers of a uniform grid over the interposer (rows = y)"""
    config = config or ThermalConfig()
    g = config.grid
    xs = (np.arange(g) + 0.5) * system.interposer.width / g
    ys = (np.arange(g) + 0.5) * system.interposer.height / g
    X, Y = np.meshgrid(xs, ys)
    heat = np.zeros_like(X)
    for i, chip in enumerate(system.chiplets):
        if chip.power == 0:
            continue
        sigma = max(chip.width, chip.length) / 2 + config.sigma0
        d2 = (X - placement.centers[i, 0]) ** 2 + (Y - placement.centers[i, 1]) ** 2
        heat += chip.power * np.exp(-d2 / (2 * sigma ** 2))
    return system.interposer.ambient + config.kappa * heat


def peak_temperature(system: ChipletSystem, placement: Placement, config: Optional[ThermalConfig] = None) -> float:
    return float(thermal_map(system, placement, config).max())


def evaluate_order(
    system: ChipletSystem,
    order,
    placer_cfg: Optional[PlacerConfig] = None,
    thermal_cfg: Optional[ThermalConfig] = None,
) -> ScatterPoint:
    order = validate_order(system, order)
    placement = place_sequential(system, order, placer_cfg)
    return ScatterPoint(
        order=order,
        temperature=peak_temperature(system, placement, thermal_cfg),
        wirelength=total_wirelength(system, placement),
    )


def enumerate_orders(system: ChipletSystem, source: OrderSource = 'all', cap: int = MAX_ENUMERABLE) -> List[PlacementOrder]:
    """
    Expand an order source into a sorted list of distinct placement orders

    Args:
        source: 'all', an explicit list of orders, or SampledOrders(max_orders, seed)
        cap: largest chiplet count for which 'all' is allowed
    """
    n = system.n
    if isinstance(source, str):
        if source != 'all':
            raise ValueError(f"Unsupported order source: {source}")
        if n > cap:
            raise TooManyOrders(f"system '{system.name}' has {n} chiplets; all-permutations is capped at n <= {cap}")
        return [PlacementOrder(p) for p in itertools.permutations(range(n))]

    if isinstance(source, SampledOrders):
        total = math.factorial(n)
        if source.max_orders >= total:
            return [PlacementOrder(p) for p in itertools.permutations(range(n))]
        rng = np.random.default_rng(source.seed)
        drawn = set()
        while len(drawn) < source.max_orders:
            drawn.add(tuple(int(i) for i in rng.permutation(n)))
        return [PlacementOrder(p) for p in sorted(drawn)]

    orders = {validate_order(system, o).sequence for o in source}
    return [PlacementOrder(p) for p in sorted(orders)]


def _evaluate_chunk(system, placer_cfg, thermal_cfg, orders):
    return [evaluate_order(system, o, placer_cfg, thermal_cfg) for o in orders]


def sweep(
    system: ChipletSystem,
    orders: OrderSource = 'all',
    parallelism: int = 1,
    placer_cfg: Optional[PlacerConfig] = None,
    thermal_cfg: Optional[ThermalConfig] = None,
    cap: int = MAX_ENUMERABLE,
) -> ScatterSet:
    """
    Evaluate every requested order; output sorted by order so it does not depend on scheduling
    """
    placer_cfg = placer_cfg or PlacerConfig()
    thermal_cfg = thermal_cfg or ThermalConfig()
    order_list = enumerate_orders(system, orders, cap)
    logger.info(f"Sweeping {len(order_list)} orders of system '{system.name}' with {parallelism} worker(s)")

    if parallelism <= 1 or len(order_list) < 2:
        points = []
        for idx, order in enumerate(order_list, 1):
            points.append(evaluate_order(system, order, placer_cfg, thermal_cfg))
            if idx % 100 == 0:
                logger.info(f"Evaluated {idx}/{len(order_list)} orders")
    else:
        chunk = max(1, math.ceil(len(order_list) / (parallelism * 4)))
        chunks = [order_list[i:i + chunk] for i in range(0, len(order_list), chunk)]
        worker = partial(_evaluate_chunk, system, placer_cfg, thermal_cfg)
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            points = [p for part in pool.map(worker, chunks) for p in part]

    points.sort(key=lambda p: p.order.sequence)
    return ScatterSet(system_name=system.name, points=tuple(points))
