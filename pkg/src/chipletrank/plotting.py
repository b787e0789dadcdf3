"""
Scatter and histogram SVG plots of labeled sweeps
"""
import logging
from pathlib import Path
from typing import Sequence, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .core import PlacementOrder  # noqa: E402
from .data_handler import DataSaver  # noqa: E402
from .errors import EmptyScatter, IoError  # noqa: E402
from .pareto import MAX_LEVEL, LabeledScatter, pareto_front  # noqa: E402
from .placer import ScatterSet  # noqa: E402

logger = logging.getLogger(__name__)

# fixed salt and no date so identical inputs give byte-identical SVG files
SVG_RC = {'svg.hashsalt': 'chipletrank', 'svg.fonttype': 'none'}
SVG_METADATA = {'Date': None, 'Creator': None}
LEVEL_COLORS = [matplotlib.colormaps['viridis'](i / MAX_LEVEL) for i in range(MAX_LEVEL + 1)]


def _save(fig, path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format='svg', metadata=SVG_METADATA)
    except OSError as exc:
        raise IoError(f"cannot write plot {path}: {exc}") from exc
    finally:
        plt.close(fig)


def plot_frame(labeled: LabeledScatter, highlights: Sequence[PlacementOrder] = ()) -> pd.DataFrame:
    """The plotted data: one row per point, with front membership and highlight rank"""
    df = DataSaver.labeled_frame(labeled)
    front = set(pareto_front(labeled.points))
    df['pareto'] = [i in front for i in range(len(df))]
    rank = {str(o): k for k, o in enumerate(highlights, 1)}
    df['highlight'] = [rank.get(o, 0) for o in df['order']]
    return df


def emit_scatter_plot(labeled: LabeledScatter, highlights: Sequence[PlacementOrder], path: Union[str, Path],
                      title: str = None) -> Path:
    """
    Write WL-vs-T scatter colored by level with the Pareto front and highlighted orders,
    plus a companion CSV next to the SVG

    Returns:
        Path of the companion CSV
    """
    if len(labeled.level) == 0:
        raise EmptyScatter("nothing to plot")
    path = Path(path)
    df = plot_frame(labeled, highlights)

    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 5))
        for level in range(MAX_LEVEL + 1):
            sub = df[df['level'] == level]
            if len(sub):
                ax.scatter(sub['wirelength_mm'], sub['temperature_c'], s=12, color=LEVEL_COLORS[level],
                           label=f'L={level}', zorder=2)

        front = df[df['pareto']].sort_values(['wirelength_mm', 'temperature_c'])
        ax.plot(front['wirelength_mm'], front['temperature_c'], '-', color='black', linewidth=1,
                label='Pareto front', zorder=3)

        for order in highlights:
            row = df[df['order'] == str(order)]
            if row.empty:
                logger.warning(f"Highlighted order {order} is not in the sweep")
                continue
            x, y = row['wirelength_mm'].iloc[0], row['temperature_c'].iloc[0]
            ax.scatter([x], [y], marker='*', s=120, color='red', edgecolor='black', zorder=4)
            ax.annotate(str(order), (x, y), textcoords='offset points', xytext=(4, 4), fontsize=7)

        ax.set_xlabel('Total wirelength (mm)')
        ax.set_ylabel('Peak temperature (C)')
        ax.set_title(title or labeled.points.system_name)
        ax.legend(fontsize=6, ncol=2, loc='upper right')
        fig.tight_layout()
        _save(fig, path)

    csv_path = path.with_suffix('.csv')
    DataSaver().save_frame(df, csv_path)
    logger.info(f"✓ Saved scatter plot to {path}")
    return csv_path


def emit_histograms(scatter: ScatterSet, path: Union[str, Path], bins: int = 30) -> None:
    """Frequency histograms of peak temperature and total wirelength over a sweep"""
    if len(scatter) == 0:
        raise EmptyScatter("nothing to plot")
    path = Path(path)
    with plt.rc_context(SVG_RC):
        fig, (ax_t, ax_wl) = plt.subplots(1, 2, figsize=(9, 3.5))
        ax_t.hist(scatter.temperatures, bins=bins, color='tab:red')
        ax_t.set_xlabel('Peak temperature (C)')
        ax_t.set_ylabel('Frequency')
        ax_wl.hist(scatter.wirelengths, bins=bins, color='tab:blue')
        ax_wl.set_xlabel('Total wirelength (mm)')
        fig.suptitle(scatter.system_name)
        fig.tight_layout()
        _save(fig, path)
    logger.info(f"✓ Saved histograms to {path}")
