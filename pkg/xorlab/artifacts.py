"""
CSV and manifest output.

Every command collects its tables in an ``ArtifactWriter`` and writes them in
one pass at the end, followed by ``manifest.json``. Floats are written in
their shortest round-trip decimal form, so CSVs are byte-identical for a
fixed seed.
"""

import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel, Field

from . import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"

# Column contracts of every CSV the tool emits
SCHEMAS: dict[str, tuple[str, ...]] = {
    "sweep": ("model", "lr", "trials", "successes", "success_rate"),
    "curves": ("model", "epoch", "success_rate", "mean_mse"),
    "landscape": ("w1", "w2", "mse"),
    "minima": ("w1", "w2", "mse", "pattern", "kind"),
    "quadrants": ("config", "input_range", "quadrant", "trials", "successes", "success_rate", "and_rate"),
    "trajectory": ("epoch", "w1", "w2", "mse"),
    "boundary": ("x1", "x2", "mean_class"),
    "margins": ("model", "input_range", "margin", "spread"),
    "bench": ("model", "repetition", "wall_time_ns"),
    "bench_summary": ("model", "min_ns", "median_ns", "p95_ns"),
}

# Columns dropped under --no-timing
TIMING_COLUMNS = frozenset({"wall_time_ns", "min_ns", "median_ns", "p95_ns"})


class RunManifest(BaseModel):
    command: str
    config: dict[str, Any]
    base_seed: int
    version: str = __version__
    started_at: str = Field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    outputs: list[str] = []
    summary: dict[str, Any] = {}


def read_csv(path: Path) -> pd.DataFrame:
    # range tags such as "01" stay text
    return pd.read_csv(path, float_precision="round_trip", keep_default_na=True, dtype={"input_range": str})


class ArtifactWriter:
    """Single writer for one command run"""

    def __init__(self, out_dir: Path, no_timing: bool = False):
        self.out_dir = Path(out_dir)
        self.no_timing = no_timing
        self._tables: dict[str, pd.DataFrame] = {}

    def add_table(self, filename: str, frame: pd.DataFrame) -> None:
        if filename in self._tables:
            raise ValueError(f"Artifact {filename} registered twice")
        if self.no_timing:
            frame = frame.drop(columns=[c for c in frame.columns if c in TIMING_COLUMNS])
        self._tables[filename] = frame

    def write(self, manifest: RunManifest) -> RunManifest:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for filename, frame in self._tables.items():
            path = self.out_dir / filename
            frame.to_csv(path, index=False, lineterminator="\n")
            logger.info(f"✅ Wrote {path} ({len(frame)} rows)")

        manifest = manifest.model_copy(update={"outputs": list(self._tables)})
        manifest_path = self.out_dir / MANIFEST_NAME
        manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n")
        logger.info(f"📋 Wrote {manifest_path}")
        return manifest


def load_manifest(out_dir: Path) -> RunManifest:
    return RunManifest.model_validate_json((Path(out_dir) / MANIFEST_NAME).read_text())


def detect_schema(frame: pd.DataFrame) -> str:
    """Name of the CSV contract a table follows, or raise ValueError"""
    columns = tuple(frame.columns)
    for name, schema in SCHEMAS.items():
        if columns == schema:
            return name
    # tables written with --no-timing, and trial.csv whose param columns vary
    for name, schema in SCHEMAS.items():
        if columns == tuple(c for c in schema if c not in TIMING_COLUMNS):
            return name
    if columns[:3] == ("epoch", "mse", "correct_count"):
        return "trial"
    raise ValueError(f"Unrecognised CSV columns: {', '.join(columns)}")
