"""
Problem-instance data model: chiplets, nets, interposer, systems and placement orders
"""
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidOrder, InvalidSystem, MalformedFile

logger = logging.getLogger(__name__)

SYSTEM_KEYS = {'name', 'interposer', 'chiplets', 'nets'}
INTERPOSER_KEYS = {'width_mm', 'height_mm', 'ambient_c'}
CHIPLET_KEYS = {'name', 'width_mm', 'length_mm', 'power_w'}
NET_KEYS = {'a', 'b', 'wires'}


@dataclass(frozen=True)
class Chiplet:
    name: str
    width: float
    length: float
    power: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidSystem(f"chiplet '{self.name}': width must be > 0, got {self.width}")
        if not self.length > 0:
            raise InvalidSystem(f"chiplet '{self.name}': length must be > 0, got {self.length}")
        if not self.power >= 0:
            raise InvalidSystem(f"chiplet '{self.name}': power must be >= 0, got {self.power}")

    @property
    def area(self) -> float:
        return self.width * self.length


@dataclass(frozen=True)
class Net:
    a: int
    b: int
    wires: int

    def __post_init__(self):
        if self.a == self.b:
            raise InvalidSystem(f"net ({self.a},{self.b}): endpoints must differ")
        if self.wires < 1:
            raise InvalidSystem(f"net ({self.a},{self.b}): wires must be >= 1, got {self.wires}")


@dataclass(frozen=True)
class Interposer:
    width: float
    height: float
    ambient: float = 45.0

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidSystem(f"interposer: width must be > 0, got {self.width}")
        if not self.height > 0:
            raise InvalidSystem(f"interposer: height must be > 0, got {self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class PlacementOrder:
    """Permutation of chiplet indices; position t holds the chiplet placed at step t+1"""
    sequence: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'sequence', tuple(int(i) for i in self.sequence))

    def __len__(self) -> int:
        return len(self.sequence)

    def __iter__(self):
        return iter(self.sequence)

    def __str__(self) -> str:
        return '-'.join(str(i) for i in self.sequence)

    @classmethod
    def parse(cls, text: str) -> 'PlacementOrder':
        """Parse the dash-separated form used in CSV files, e.g. '2-0-1'"""
        try:
            return cls(tuple(int(tok) for tok in str(text).strip().split('-')))
        except ValueError as exc:
            raise InvalidOrder(f"cannot parse placement order '{text}'") from exc


@dataclass(frozen=True)
class ChipletSystem:
    name: str
    interposer: Interposer
    chiplets: Tuple[Chiplet, ...]
    nets: Tuple[Net, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'chiplets', tuple(self.chiplets))
        object.__setattr__(self, 'nets', tuple(self.nets))
        n = len(self.chiplets)
        if n < 1:
            raise InvalidSystem(f"system '{self.name}': chiplets must contain at least one chiplet")

        names = [c.name for c in self.chiplets]
        duplicates = sorted({nm for nm in names if names.count(nm) > 1})
        if duplicates:
            raise InvalidSystem(f"system '{self.name}': chiplets.name must be unique, duplicated {duplicates}")

        seen = set()
        for net in self.nets:
            for endpoint in (net.a, net.b):
                if not 0 <= endpoint < n:
                    raise InvalidSystem(
                        f"system '{self.name}': nets endpoint {endpoint} out of range for {n} chiplets"
                    )
            key = (min(net.a, net.b), max(net.a, net.b))
            if key in seen:
                raise InvalidSystem(f"system '{self.name}': nets has more than one net for pair {key}")
            seen.add(key)

        total_area = sum(c.area for c in self.chiplets)
        if total_area > self.interposer.area:
            raise InvalidSystem(
                f"system '{self.name}': interposer area {self.interposer.area:g} mm^2 is smaller "
                f"than total chiplet area {total_area:g} mm^2"
            )

    @property
    def n(self) -> int:
        return len(self.chiplets)

    @cached_property
    def areas(self) -> np.ndarray:
        return np.array([c.area for c in self.chiplets], dtype=np.float64)

    @cached_property
    def powers(self) -> np.ndarray:
        return np.array([c.power for c in self.chiplets], dtype=np.float64)

    @cached_property
    def wire_matrix(self) -> np.ndarray:
        """Symmetric n x n matrix of wire counts (0 where no net)"""
        wires = np.zeros((self.n, self.n), dtype=np.float64)
        for net in self.nets:
            wires[net.a, net.b] = net.wires
            wires[net.b, net.a] = net.wires
        return wires

    @property
    def total_wires(self) -> int:
        return sum(net.wires for net in self.nets)


def canonical_nets(raw: Iterable[Tuple[int, int, int]]) -> Tuple[Net, ...]:
    """Merge duplicate nets by summing wires and canonicalize to a < b, sorted"""
    merged: Dict[Tuple[int, int], int] = {}
    for a, b, wires in raw:
        if a == b:
            raise InvalidSystem(f"nets: endpoints must differ, got ({a},{b})")
        key = (min(a, b), max(a, b))
        merged[key] = merged.get(key, 0) + wires
    return tuple(Net(a, b, w) for (a, b), w in sorted(merged.items()))


def _require(obj: Any, kind: type, where: str):
    if not isinstance(obj, kind) or isinstance(obj, bool):
        raise MalformedFile(f"{where}: expected {kind.__name__}, got {type(obj).__name__}")
    return obj


def _check_keys(obj: Dict[str, Any], allowed: set, where: str) -> None:
    _require(obj, dict, where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise MalformedFile(f"{where}: unknown keys {unknown}")
    missing = sorted(allowed - set(obj))
    if missing:
        raise MalformedFile(f"{where}: missing keys {missing}")


def _number(obj: Any, where: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise MalformedFile(f"{where}: expected a number, got {obj!r}")
    if not math.isfinite(obj):
        raise InvalidSystem(f"{where}: must be finite, got {obj!r}")
    return float(obj)


def _integer(obj: Any, where: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise MalformedFile(f"{where}: expected an integer, got {obj!r}")
    return obj


def system_from_dict(data: Dict[str, Any]) -> ChipletSystem:
    """Build a validated ChipletSystem from the decoded JSON document"""
    _check_keys(data, SYSTEM_KEYS, 'system')
    name = _require(data['name'], str, 'name')

    ip = data['interposer']
    _check_keys(ip, INTERPOSER_KEYS, 'interposer')
    interposer = Interposer(
        width=_number(ip['width_mm'], 'interposer.width_mm'),
        height=_number(ip['height_mm'], 'interposer.height_mm'),
        ambient=_number(ip['ambient_c'], 'interposer.ambient_c'),
    )

    chiplets: List[Chiplet] = []
    for i, c in enumerate(_require(data['chiplets'], list, 'chiplets')):
        where = f'chiplets[{i}]'
        _check_keys(c, CHIPLET_KEYS, where)
        chiplets.append(Chiplet(
            name=_require(c['name'], str, f'{where}.name'),
            width=_number(c['width_mm'], f'{where}.width_mm'),
            length=_number(c['length_mm'], f'{where}.length_mm'),
            power=_number(c['power_w'], f'{where}.power_w'),
        ))

    raw_nets = []
    for i, net in enumerate(_require(data['nets'], list, 'nets')):
        where = f'nets[{i}]'
        _check_keys(net, NET_KEYS, where)
        raw_nets.append((
            _integer(net['a'], f'{where}.a'),
            _integer(net['b'], f'{where}.b'),
            _integer(net['wires'], f'{where}.wires'),
        ))
    for i, (a, b, wires) in enumerate(raw_nets):
        if wires < 1:
            raise InvalidSystem(f"nets[{i}].wires must be >= 1, got {wires}")
        for endpoint in (a, b):
            if not 0 <= endpoint < len(chiplets):
                raise InvalidSystem(f"nets[{i}]: endpoint {endpoint} out of range for {len(chiplets)} chiplets")

    return ChipletSystem(name=name, interposer=interposer, chiplets=tuple(chiplets),
                         nets=canonical_nets(raw_nets))


def system_to_dict(system: ChipletSystem) -> Dict[str, Any]:
    return {
        'name': system.name,
        'interposer': {
            'width_mm': system.interposer.width,
            'height_mm': system.interposer.height,
            'ambient_c': system.interposer.ambient,
        },
        'chiplets': [
            {'name': c.name, 'width_mm': c.width, 'length_mm': c.length, 'power_w': c.power}
            for c in system.chiplets
        ],
        'nets': [{'a': net.a, 'b': net.b, 'wires': net.wires} for net in system.nets],
    }


def parse_system(path: Union[str, Path]) -> ChipletSystem:
    """
    Load and validate a system file

    Args:
        path: Path to system JSON

    Returns:
        Validated ChipletSystem with duplicate nets merged
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"System file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: {exc}") from exc
    system = system_from_dict(data)
    logger.debug(f"Parsed system '{system.name}' with {system.n} chiplets and {len(system.nets)} nets")
    return system


def validate_order(system: ChipletSystem, order: Union[PlacementOrder, Sequence[int]]) -> PlacementOrder:
    """Return the order as a PlacementOrder, or raise InvalidOrder if it is not a permutation of 0..n-1"""
    if not isinstance(order, PlacementOrder):
        order = PlacementOrder(tuple(order))
    seq = order.sequence
    n = system.n
    if len(seq) != n:
        raise InvalidOrder(f"order {order} has {len(seq)} entries, system '{system.name}' has {n} chiplets")
    out_of_range = [i for i in seq if not 0 <= i < n]
    if out_of_range:
        raise InvalidOrder(f"order {order} has out-of-range indices {out_of_range}")
    if len(set(seq)) != n:
        raise InvalidOrder(f"order {order} repeats an index")
    return order
