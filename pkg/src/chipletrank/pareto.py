"""
Pareto-slack labeling of scatter points into correlation levels 0..10

A point's slack d is the least relaxation (in units of the corner spread D_T, D_WL) at which
it passes the relaxed non-domination test

    for all j: T_i <= T_j + d * D_T  or  WL_i <= WL_j + d * D_WL

and its level is 10 - floor(d / 0.1), clamped at 0.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import DegenerateSpread, EmptyScatter
from .placer import ScatterSet

logger = logging.getLogger(__name__)

LEVEL_STEP = 0.1
MAX_LEVEL = 10

Points = Union[ScatterSet, np.ndarray]


def _as_array(points: Points) -> np.ndarray:
    if isinstance(points, ScatterSet):
        arr = np.column_stack([points.temperatures, points.wirelengths]) if len(points) else np.empty((0, 2))
    else:
        arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(arr) == 0:
        raise EmptyScatter("scatter has no points")
    return arr


@dataclass(frozen=True)
class CornerSets:
    P: Tuple[int, ...]
    Q: Tuple[int, ...]
    mean_t_p: float
    mean_t_q: float
    mean_wl_p: float
    mean_wl_q: float

    @property
    def n1(self) -> int:
        return len(self.P)

    @property
    def n2(self) -> int:
        return len(self.Q)

    @property
    def d_t(self) -> float:
        return self.mean_t_q - self.mean_t_p

    @property
    def d_wl(self) -> float:
        return self.mean_wl_q - self.mean_wl_p


@dataclass(frozen=True)
class LabeledScatter:
    points: ScatterSet
    slack: np.ndarray
    level: np.ndarray
    corners: CornerSets

    def histogram(self) -> np.ndarray:
        """Point count per level 0..10"""
        return np.bincount(self.level, minlength=MAX_LEVEL + 1)


def pareto_front(points: Points) -> Tuple[int, ...]:
    """Indices of points not dominated in (T, WL); coincident points are all kept"""
    arr = _as_array(points)
    t, wl = arr[:, 0], arr[:, 1]
    weakly_better = (t[None, :] <= t[:, None]) & (wl[None, :] <= wl[:, None])
    strictly = (t[None, :] < t[:, None]) | (wl[None, :] < wl[:, None])
    dominated = (weakly_better & strictly).any(axis=1)
    return tuple(int(i) for i in np.flatnonzero(~dominated))


def corner_sets(points: Points) -> CornerSets:
    arr = _as_array(points)
    P = pareto_front(arr)
    Q = pareto_front(-arr)
    p_rows, q_rows = arr[list(P)], arr[list(Q)]
    return CornerSets(
        P=P,
        Q=Q,
        mean_t_p=float(p_rows[:, 0].mean()),
        mean_t_q=float(q_rows[:, 0].mean()),
        mean_wl_p=float(p_rows[:, 1].mean()),
        mean_wl_q=float(q_rows[:, 1].mean()),
    )


def _all_slacks(arr: np.ndarray, corners: CornerSets) -> np.ndarray:
    t, wl = arr[:, 0], arr[:, 1]
    # gap[i, j] > 0 in both columns only where j strictly dominates i
    gap_t = (t[:, None] - t[None, :]) / corners.d_t
    gap_wl = (wl[:, None] - wl[None, :]) / corners.d_wl
    needed = np.where((gap_t > 0) & (gap_wl > 0), np.minimum(gap_t, gap_wl), 0.0)
    return needed.max(axis=1)


def _is_degenerate(arr: np.ndarray, corners: CornerSets) -> bool:
    return len(arr) > 1 and (corners.d_t <= 0 or corners.d_wl <= 0)


def slack(points: Points, corners: CornerSets, i: int) -> float:
    """Least relaxation d_i at which point i is non-dominated; 0 on the Pareto front"""
    arr = _as_array(points)
    if len(arr) == 1:
        return 0.0
    if _is_degenerate(arr, corners):
        warnings.warn("zero temperature or wirelength spread; slack is 0", DegenerateSpread, stacklevel=2)
        return 0.0
    gap_t = (arr[i, 0] - arr[:, 0]) / corners.d_t
    gap_wl = (arr[i, 1] - arr[:, 1]) / corners.d_wl
    dominators = (gap_t > 0) & (gap_wl > 0)
    if not dominators.any():
        return 0.0
    return float(np.minimum(gap_t, gap_wl)[dominators].max())


def level_of(d: float) -> int:
    """10 for d in [0, 0.1), 9 for [0.1, 0.2), ..., 1 for [0.9, 1.0), 0 for d >= 1"""
    bucket = math.floor(round(d / LEVEL_STEP, 9))
    return max(MAX_LEVEL - bucket, 0)


def assign_levels(points: ScatterSet) -> LabeledScatter:
    arr = _as_array(points)
    corners = corner_sets(arr)
    if len(arr) == 1:
        d = np.zeros(1)
    elif _is_degenerate(arr, corners):
        message = (
            f"scatter '{getattr(points, 'system_name', '?')}' has zero spread "
            f"(D_T={corners.d_t:g}, D_WL={corners.d_wl:g}); all slacks set to 0"
        )
        logger.warning(message)
        warnings.warn(message, DegenerateSpread, stacklevel=2)
        d = np.zeros(len(arr))
    else:
        d = _all_slacks(arr, corners)
    levels = np.array([level_of(x) for x in d], dtype=np.int64)
    logger.info(f"Labeled {len(arr)} points; level histogram {np.bincount(levels, minlength=MAX_LEVEL + 1).tolist()}")
    return LabeledScatter(points=points, slack=d, level=levels, corners=corners)
