"""
Report bundle exporter: CSV tables, JSON documents and the run manifest.

Copyright (c) 2025 Teo693
Licensed under the MIT License - see LICENSE file for details.
"""

import logging
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from src.data.storage.codec import atomic_write_text, save_json

logger = logging.getLogger(__name__)

TRACKED_PACKAGES = ("qmms", "numpy", "scipy", "pandas", "python-dotenv")


def package_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version()}
    for name in TRACKED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "not installed"
    return versions


class BundleExporter:
    """Writes every artifact of one run into a single directory, atomically"""

    def __init__(self, output_dir: str):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: List[str] = []

    def _track(self, path: Path) -> Path:
        self.artifacts.append(path.name)
        return path

    def export_table(self, name: str, table: pd.DataFrame) -> Path:
        """Plot-ready CSV, full float precision"""
        path = atomic_write_text(self.output_dir / f"{name}.csv", table.to_csv(index=False, lineterminator="\n"))
        logger.info("wrote %s (%d rows)", path, len(table))
        return self._track(path)

    def export_json(self, name: str, payload: Any) -> Path:
        path = save_json(self.output_dir / f"{name}.json", payload)
        logger.info("wrote %s", path)
        return self._track(path)

    def write_manifest(
        self,
        config: Dict[str, Any],
        timings: Dict[str, float],
        extra: Optional[Dict[str, Any]] = None,
    ) -> Path:
        """
        manifest.json: config echo, package versions, timings and artifacts.

        Args:
            config: AppConfig.to_dict() of the run
            timings: seconds per stage
            extra: command specific fields (verdicts, exit code)
        """
        manifest = {
            "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": config,
            "seed": config.get("run", {}).get("seed"),
            "versions": package_versions(),
            "timings": timings,
            "artifacts": sorted(set(self.artifacts)),
        }
        if extra:
            manifest.update(extra)
        return save_json(self.output_dir / "manifest.json", manifest)
