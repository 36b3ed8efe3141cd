"""
Static SVG rendering of the CSV artifacts.

Reads only what the experiment commands wrote; nothing here trains a model.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .artifacts import MANIFEST_NAME, load_manifest, read_csv  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed ids and no timestamp, so identical CSVs give identical SVGs
plt.rcParams["svg.hashsalt"] = "xorlab"
SVG_METADATA = {"Date": None}


def _pivot(frame: pd.DataFrame, x: str, y: str, value: str) -> pd.DataFrame:
    return frame.pivot(index=y, columns=x, values=value).sort_index().sort_index(axis=1)


def _sweep(frame: pd.DataFrame, ax, source: Path) -> None:
    for model, rows in frame.groupby("model", sort=False):
        rows = rows.sort_values("lr")
        ax.plot(rows["lr"], rows["success_rate"], marker="o", markersize=3, label=model)
    ax.set_xscale("log")
    ax.set_xlabel("learning rate")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()


def _curves(frame: pd.DataFrame, ax, source: Path) -> None:
    for model, rows in frame.groupby("model", sort=False):
        ax.plot(rows["epoch"], rows["success_rate"], label=model)
    ax.set_xlabel("epoch")
    ax.set_ylabel("fraction of trials solved")
    ax.set_ylim(-0.02, 1.02)
    ax.legend()


def _landscape(frame: pd.DataFrame, ax, source: Path) -> None:
    grid = _pivot(frame, "w1", "w2", "mse")
    mesh = ax.pcolormesh(grid.columns, grid.index, grid.values, shading="nearest", cmap="viridis")
    ax.figure.colorbar(mesh, ax=ax, label="mse")
    ax.contour(grid.columns, grid.index, grid.values, levels=15, colors="white", linewidths=0.4)

    minima_path = source.with_name("minima.csv")
    if minima_path.exists():
        minima = read_csv(minima_path)
        for kind, marker in (("global", "*"), ("local", "x")):
            rows = minima[minima["kind"] == kind]
            if len(rows):
                ax.scatter(rows["w1"], rows["w2"], marker=marker, s=80, c="red", label=f"{kind} minimum")

    for path in sorted(source.parent.glob("trajectory_*.csv")):
        trajectory = read_csv(path)
        label = path.stem.removeprefix("trajectory_")
        ax.plot(trajectory["w1"], trajectory["w2"], linewidth=1.2, label=label)
        ax.scatter(trajectory["w1"].iloc[:1], trajectory["w2"].iloc[:1], s=12)

    ax.set_xlabel("w1")
    ax.set_ylabel("w2")
    ax.set_aspect("equal")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right", fontsize="small")


def _boundary(frame: pd.DataFrame, ax, source: Path) -> None:
    grid = _pivot(frame, "x1", "x2", "mean_class")
    mesh = ax.pcolormesh(grid.columns, grid.index, grid.values, shading="nearest", cmap="coolwarm", vmin=0, vmax=1)
    ax.figure.colorbar(mesh, ax=ax, label="mean class")
    ax.contour(grid.columns, grid.index, grid.values, levels=[0.5], colors="black", linewidths=1.0)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal")


def _trajectory(frame: pd.DataFrame, ax, source: Path) -> None:
    ax.plot(frame["w1"], frame["w2"], marker=".", markersize=3)
    ax.set_xlabel("w1")
    ax.set_ylabel("w2")


def _bench(frame: pd.DataFrame, ax, source: Path) -> None:
    if "wall_time_ns" not in frame.columns:
        raise ValueError(f"{source} was written with --no-timing; nothing to plot")
    groups = list(frame.groupby("model", sort=False))
    ax.boxplot([rows["wall_time_ns"] / 1e6 for _, rows in groups])
    ax.set_xticks(range(1, len(groups) + 1), [model for model, _ in groups])
    ax.set_ylabel("wall time per trial (ms)")


def _trial(frame: pd.DataFrame, ax, source: Path) -> None:
    ax.plot(frame["epoch"], frame["mse"], marker="." if len(frame) == 1 else None)
    ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mse")


def _minima_scatter(frame: pd.DataFrame, ax, source: Path) -> None:
    for kind, rows in frame.groupby("kind", sort=False):
        ax.scatter(rows["w1"], rows["w2"], label=kind)
        for _, row in rows.iterrows():
            ax.annotate(str(row["pattern"]), (row["w1"], row["w2"]), fontsize="small")
    ax.set_xlabel("w1")
    ax.set_ylabel("w2")
    ax.legend()


def _bars(column: str, label: str):
    def draw(frame: pd.DataFrame, ax, source: Path) -> None:
        if column not in frame.columns:
            raise ValueError(f"{source} was written with --no-timing; nothing to plot")
        if "config" in frame.columns:
            names = [f"{c} q{q}" for c, q in zip(frame["config"], frame["quadrant"])]
        else:
            names = list(frame["model"])
        ax.bar(range(len(frame)), frame[column])
        ax.set_xticks(range(len(frame)), names, rotation=45, ha="right")
        ax.set_ylabel(label)

    return draw


RENDERERS = {
    "sweep": _sweep,
    "curves": _curves,
    "landscape": _landscape,
    "boundary": _boundary,
    "trajectory": _trajectory,
    "bench": _bench,
    "trial": _trial,
    "minima": _minima_scatter,
    "quadrants": _bars("success_rate", "success rate"),
    "margins": _bars("margin", "margin (input spacings)"),
    "bench_summary": _bars("median_ns", "median wall time (ns)"),
}


def _title(source: Path) -> str:
    manifest_path = source.with_name(MANIFEST_NAME)
    if not manifest_path.exists():
        return source.stem
    try:
        manifest = load_manifest(source.parent)
    except ValueError as e:
        logger.warning(f"Ignoring unreadable {manifest_path}: {e}")
        return source.stem
    return f"{source.stem} ({manifest.command}, seed {manifest.base_seed})"


def render(schema: str, frame: pd.DataFrame, target: Path, source: Path) -> Path:
    """Render one CSV of a known schema to an SVG file"""
    draw = RENDERERS.get(schema)
    if draw is None:
        raise ValueError(f"No renderer for {schema} tables")

    fig, ax = plt.subplots(figsize=(6, 5))
    try:
        draw(frame, ax, source)
        ax.set_title(_title(source))
        fig.tight_layout()
        fig.savefig(target, format="svg", metadata=SVG_METADATA)
    finally:
        plt.close(fig)
    return target

